#include "deqgan/autodiff.hpp"

#include <cmath>
#include <utility>

namespace deqgan::ad {

namespace {

void check_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double huber_value(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

}  // namespace

Var Tape::parameter(const Mat& value, std::string name) {
  Node n;
  n.value = value;
  n.is_param = true;
  n.name = std::move(name);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Mat value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::emit(Op op, Mat value, std::initializer_list<Var> args, int iaux,
               double saux) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.iaux = iaux;
  n.saux = saux;
  for (Var a : args) {
    if (a.tape() != this)
      throw std::invalid_argument("operands must live on one tape");
    n.args[n.nargs++] = a.id();
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var add(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "add");
  return a.tape()->emit(Op::kAdd, a.value() + b.value(), {a, b});
}

Var sub(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "sub");
  return a.tape()->emit(Op::kSub, a.value() - b.value(), {a, b});
}

Var mul(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "mul");
  return a.tape()->emit(Op::kMul, a.value().cwiseProduct(b.value()), {a, b});
}

Var div(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "div");
  return a.tape()->emit(Op::kDiv, a.value().cwiseQuotient(b.value()), {a, b});
}

Var matmul(Var a, Var b) {
  if (a.value().cols() != b.value().rows())
    throw std::invalid_argument("matmul: inner dimensions disagree");
  return a.tape()->emit(Op::kMatMul, a.value() * b.value(), {a, b});
}

Var add_col(Var a, Var col) {
  if (col.value().cols() != 1 || col.value().rows() != a.value().rows())
    throw std::invalid_argument("add_col: expected matching column vector");
  Mat v = a.value();
  v.colwise() += Eigen::VectorXd(col.value().col(0));
  return a.tape()->emit(Op::kAddCol, std::move(v), {a, col});
}

Var tanh(Var a) {
  return a.tape()->emit(Op::kTanh, a.value().array().tanh().matrix(), {a});
}

Var exp(Var a) {
  return a.tape()->emit(Op::kExp, a.value().array().exp().matrix(), {a});
}

Var log(Var a) {
  return a.tape()->emit(Op::kLog, a.value().array().log().matrix(), {a});
}

Var sigmoid(Var a) {
  return a.tape()->emit(
      Op::kSigmoid, a.value().unaryExpr([](double x) { return stable_sigmoid(x); }),
      {a});
}

Var softplus(Var a) {
  return a.tape()->emit(
      Op::kSoftplus,
      a.value().unaryExpr([](double x) { return stable_softplus(x); }), {a});
}

Var abs(Var a) {
  return a.tape()->emit(Op::kAbs, a.value().cwiseAbs(), {a});
}

Var huber(Var a, double delta) {
  return a.tape()->emit(
      Op::kHuber,
      a.value().unaryExpr([delta](double r) { return huber_value(r, delta); }),
      {a}, 0, delta);
}

Var neg(Var a) { return a.tape()->emit(Op::kNeg, -a.value(), {a}); }

Var powi(Var a, int exponent) {
  if (exponent < 0) throw std::invalid_argument("powi: negative exponent");
  return a.tape()->emit(
      Op::kPowI,
      a.value().unaryExpr([exponent](double x) { return ipow(x, exponent); }),
      {a}, exponent);
}

Var scale(Var a, double c) {
  return a.tape()->emit(Op::kScale, c * a.value(), {a}, 0, c);
}

Var add_scalar(Var a, double c) {
  return a.tape()->emit(Op::kAddS, (a.value().array() + c).matrix(), {a}, 0, c);
}

Var sum(Var a) {
  return a.tape()->emit(Op::kSum, Mat::Constant(1, 1, a.value().sum()), {a});
}

Var mean(Var a) {
  return a.tape()->emit(Op::kMean, Mat::Constant(1, 1, a.value().mean()), {a});
}

Var div_scalar(Var a, Var scalar) {
  if (scalar.value().size() != 1)
    throw std::invalid_argument("div_scalar: divisor must be 1x1");
  return a.tape()->emit(Op::kDivScalar, a.value() / scalar.value()(0, 0),
                        {a, scalar});
}

Var row(Var a, int r) {
  if (r < 0 || r >= a.value().rows())
    throw std::invalid_argument("row: index out of range");
  return a.tape()->emit(Op::kRow, a.value().row(r), {a}, r);
}

Var vstack(Var a, Var b) {
  if (a.value().cols() != b.value().cols())
    throw std::invalid_argument("vstack: column counts disagree");
  Mat v(a.value().rows() + b.value().rows(), a.value().cols());
  v << a.value(), b.value();
  return a.tape()->emit(Op::kVStack, std::move(v), {a, b});
}

Var vstack(Var a, Var b, Var c) {
  if (a.value().cols() != b.value().cols() ||
      a.value().cols() != c.value().cols())
    throw std::invalid_argument("vstack: column counts disagree");
  Mat v(a.value().rows() + b.value().rows() + c.value().rows(),
        a.value().cols());
  v << a.value(), b.value(), c.value();
  return a.tape()->emit(Op::kVStack, std::move(v), {a, b, c});
}

GradientMap Tape::backward(Var loss) const {
  if (loss.tape() != this)
    throw std::logic_error("backward: loss lives on a different tape");
  if (loss.value().size() != 1)
    throw std::logic_error("backward: loss must be a scalar node");

  std::vector<Mat> adj(nodes_.size());
  adj[loss.id()] = Mat::Ones(1, 1);

  for (int i = loss.id(); i >= 0; --i) {
    const Node& n = nodes_[i];
    if (adj[i].size() == 0) continue;  // not reachable from the loss
    const Mat& g = adj[i];
    auto acc = [&](int arg, const Mat& contribution) {
      if (adj[arg].size() == 0)
        adj[arg] = contribution;
      else
        adj[arg] += contribution;
    };
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        acc(n.args[0], g);
        acc(n.args[1], g);
        break;
      case Op::kSub:
        acc(n.args[0], g);
        acc(n.args[1], -g);
        break;
      case Op::kMul:
        acc(n.args[0], g.cwiseProduct(nodes_[n.args[1]].value));
        acc(n.args[1], g.cwiseProduct(nodes_[n.args[0]].value));
        break;
      case Op::kDiv: {
        const Mat& b = nodes_[n.args[1]].value;
        acc(n.args[0], g.cwiseQuotient(b));
        acc(n.args[1], -g.cwiseProduct(n.value).cwiseQuotient(b));
        break;
      }
      case Op::kMatMul:
        acc(n.args[0], g * nodes_[n.args[1]].value.transpose());
        acc(n.args[1], nodes_[n.args[0]].value.transpose() * g);
        break;
      case Op::kAddCol:
        acc(n.args[0], g);
        acc(n.args[1], g.rowwise().sum());
        break;
      case Op::kTanh:
        acc(n.args[0],
            g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
        break;
      case Op::kExp:
        acc(n.args[0], g.cwiseProduct(n.value));
        break;
      case Op::kLog:
        acc(n.args[0], g.cwiseQuotient(nodes_[n.args[0]].value));
        break;
      case Op::kSigmoid:
        acc(n.args[0],
            g.cwiseProduct(
                (n.value.array() * (1.0 - n.value.array())).matrix()));
        break;
      case Op::kSoftplus:
        acc(n.args[0],
            g.cwiseProduct(nodes_[n.args[0]].value.unaryExpr(
                [](double x) { return stable_sigmoid(x); })));
        break;
      case Op::kAbs:
        acc(n.args[0],
            g.cwiseProduct(nodes_[n.args[0]].value.unaryExpr(
                [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); })));
        break;
      case Op::kHuber: {
        const double delta = n.saux;
        acc(n.args[0],
            g.cwiseProduct(nodes_[n.args[0]].value.unaryExpr([delta](double r) {
              return std::clamp(r, -delta, delta);
            })));
        break;
      }
      case Op::kNeg:
        acc(n.args[0], -g);
        break;
      case Op::kPowI: {
        const int k = n.iaux;
        acc(n.args[0],
            g.cwiseProduct(nodes_[n.args[0]].value.unaryExpr(
                [k](double x) { return k * ipow(x, k - 1); })));
        break;
      }
      case Op::kScale:
        acc(n.args[0], n.saux * g);
        break;
      case Op::kAddS:
        acc(n.args[0], g);
        break;
      case Op::kSum: {
        const Mat& a = nodes_[n.args[0]].value;
        acc(n.args[0], Mat::Constant(a.rows(), a.cols(), g(0, 0)));
        break;
      }
      case Op::kMean: {
        const Mat& a = nodes_[n.args[0]].value;
        acc(n.args[0],
            Mat::Constant(a.rows(), a.cols(),
                          g(0, 0) / static_cast<double>(a.size())));
        break;
      }
      case Op::kDivScalar: {
        const double s = nodes_[n.args[1]].value(0, 0);
        acc(n.args[0], g / s);
        acc(n.args[1],
            Mat::Constant(1, 1, -g.cwiseProduct(n.value).sum() / s));
        break;
      }
      case Op::kRow: {
        const Mat& a = nodes_[n.args[0]].value;
        Mat contribution = Mat::Zero(a.rows(), a.cols());
        contribution.row(n.iaux) = g;
        acc(n.args[0], std::move(contribution));
        break;
      }
      case Op::kVStack: {
        int offset = 0;
        for (int k = 0; k < n.nargs; ++k) {
          const int nrows =
              static_cast<int>(nodes_[n.args[k]].value.rows());
          acc(n.args[k], g.middleRows(offset, nrows));
          offset += nrows;
        }
        break;
      }
    }
  }

  GradientMap grads;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!n.is_param) continue;
    if (adj[i].size() == 0)
      grads[n.name] = Mat::Zero(n.value.rows(), n.value.cols());
    else
      grads[n.name] = adj[i];
  }
  return grads;
}

}  // namespace deqgan::ad
