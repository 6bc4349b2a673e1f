#include "deqgan/jet.hpp"

namespace deqgan::ad {

namespace {

void check_dims(const JetBatch& a, const JetBatch& b, const char* what) {
  if (a.dims() != b.dims())
    throw std::invalid_argument(std::string(what) +
                                ": jet dimensionality mismatch");
}

}  // namespace

JetBatch lift_input(Tape& tape, const Mat& X) {
  const int dim = static_cast<int>(X.rows());
  const int m = static_cast<int>(X.cols());
  JetBatch j;
  j.v = tape.constant(X);
  for (int k = 0; k < dim; ++k) {
    Mat unit = Mat::Zero(dim, m);
    unit.row(k).setOnes();
    j.d1.push_back(tape.constant(std::move(unit)));
    j.d2.push_back(tape.constant(Mat::Zero(dim, m)));
  }
  return j;
}

JetBatch lift_coordinate(Tape& tape, const Mat& X, int dim) {
  const int dims = static_cast<int>(X.rows());
  if (dim < 0 || dim >= dims)
    throw std::invalid_argument("lift_coordinate: dim out of range");
  const int m = static_cast<int>(X.cols());
  JetBatch j;
  j.v = tape.constant(X.row(dim));
  for (int k = 0; k < dims; ++k) {
    j.d1.push_back(
        tape.constant(k == dim ? Mat::Ones(1, m) : Mat::Zero(1, m)));
    j.d2.push_back(tape.constant(Mat::Zero(1, m)));
  }
  return j;
}

JetBatch jet_add(const JetBatch& a, const JetBatch& b) {
  check_dims(a, b, "jet_add");
  JetBatch r;
  r.v = add(a.v, b.v);
  for (int k = 0; k < a.dims(); ++k) {
    r.d1.push_back(add(a.d1[k], b.d1[k]));
    r.d2.push_back(add(a.d2[k], b.d2[k]));
  }
  return r;
}

JetBatch jet_sub(const JetBatch& a, const JetBatch& b) {
  check_dims(a, b, "jet_sub");
  JetBatch r;
  r.v = sub(a.v, b.v);
  for (int k = 0; k < a.dims(); ++k) {
    r.d1.push_back(sub(a.d1[k], b.d1[k]));
    r.d2.push_back(sub(a.d2[k], b.d2[k]));
  }
  return r;
}

JetBatch jet_mul(const JetBatch& a, const JetBatch& b) {
  check_dims(a, b, "jet_mul");
  JetBatch r;
  r.v = mul(a.v, b.v);
  for (int k = 0; k < a.dims(); ++k) {
    r.d1.push_back(add(mul(a.d1[k], b.v), mul(a.v, b.d1[k])));
    // (ab)'' = a''b + 2a'b' + ab''
    r.d2.push_back(add(add(mul(a.d2[k], b.v), scale(mul(a.d1[k], b.d1[k]), 2.0)),
                       mul(a.v, b.d2[k])));
  }
  return r;
}

JetBatch jet_tanh(const JetBatch& a) {
  JetBatch r;
  r.v = tanh(a.v);
  Var s = add_scalar(neg(mul(r.v, r.v)), 1.0);  // 1 - tanh^2
  Var fpp = scale(mul(r.v, s), -2.0);           // -2 tanh (1 - tanh^2)
  for (int k = 0; k < a.dims(); ++k) {
    r.d1.push_back(mul(s, a.d1[k]));
    r.d2.push_back(
        add(mul(fpp, mul(a.d1[k], a.d1[k])), mul(s, a.d2[k])));
  }
  return r;
}

JetBatch jet_exp(const JetBatch& a) {
  JetBatch r;
  r.v = exp(a.v);
  for (int k = 0; k < a.dims(); ++k) {
    r.d1.push_back(mul(r.v, a.d1[k]));
    r.d2.push_back(
        add(mul(r.v, mul(a.d1[k], a.d1[k])), mul(r.v, a.d2[k])));
  }
  return r;
}

JetBatch jet_scale(const JetBatch& a, double c) {
  JetBatch r;
  r.v = scale(a.v, c);
  for (int k = 0; k < a.dims(); ++k) {
    r.d1.push_back(scale(a.d1[k], c));
    r.d2.push_back(scale(a.d2[k], c));
  }
  return r;
}

JetBatch jet_add_scalar(const JetBatch& a, double c) {
  JetBatch r;
  r.v = add_scalar(a.v, c);
  r.d1 = a.d1;
  r.d2 = a.d2;
  return r;
}

JetBatch jet_neg(const JetBatch& a) { return jet_scale(a, -1.0); }

JetBatch jet_affine(Var W, Var b, const JetBatch& x) {
  JetBatch r;
  r.v = add_col(matmul(W, x.v), b);
  for (int k = 0; k < x.dims(); ++k) {
    r.d1.push_back(matmul(W, x.d1[k]));
    r.d2.push_back(matmul(W, x.d2[k]));
  }
  return r;
}

JetBatch jet_row(const JetBatch& a, int r) {
  JetBatch out;
  out.v = row(a.v, r);
  for (int k = 0; k < a.dims(); ++k) {
    out.d1.push_back(row(a.d1[k], r));
    out.d2.push_back(row(a.d2[k], r));
  }
  return out;
}

}  // namespace deqgan::ad
