#include "deqgan/problems.hpp"

#include <algorithm>
#include <cmath>

namespace deqgan {

using ad::JetBatch;
using ad::Var;

std::string to_string(ProblemKey key) {
  switch (key) {
    case ProblemKey::kExp: return "exp";
    case ProblemKey::kSho: return "sho";
    case ProblemKey::kNlo: return "nlo";
    case ProblemKey::kNas: return "nas";
    case ProblemKey::kSir: return "sir";
    case ProblemKey::kPos: return "pos";
  }
  throw std::logic_error("unknown problem key");
}

ProblemKey problem_key_from(const std::string& name) {
  if (name == "exp") return ProblemKey::kExp;
  if (name == "sho") return ProblemKey::kSho;
  if (name == "nlo") return ProblemKey::kNlo;
  if (name == "nas") return ProblemKey::kNas;
  if (name == "sir") return ProblemKey::kSir;
  if (name == "pos") return ProblemKey::kPos;
  throw ConfigError("unknown problem key: " + name);
}

Mesh make_mesh(const std::vector<std::pair<double, double>>& bounds,
               const std::vector<int>& counts) {
  if (bounds.size() != counts.size() || bounds.empty())
    throw std::invalid_argument("make_mesh: bounds/counts mismatch");
  for (int c : counts)
    if (c < 2) throw std::invalid_argument("make_mesh: need >= 2 points per dim");

  Mesh mesh;
  mesh.bounds = bounds;
  mesh.counts = counts;
  const int dims = static_cast<int>(bounds.size());
  int total = 1;
  for (int d = 0; d < dims; ++d) {
    mesh.spacing.push_back((bounds[d].second - bounds[d].first) /
                           static_cast<double>(counts[d] - 1));
    total *= counts[d];
  }
  mesh.points.resize(dims, total);
  std::vector<int> idx(dims, 0);
  for (int j = 0; j < total; ++j) {
    for (int d = 0; d < dims; ++d)
      mesh.points(d, j) = bounds[d].first + idx[d] * mesh.spacing[d];
    for (int d = 0; d < dims; ++d) {  // first coordinate advances fastest
      if (++idx[d] < counts[d]) break;
      idx[d] = 0;
    }
  }
  return mesh;
}

Problem make_problem(ProblemKey key,
                     const std::map<std::string, double>& overrides) {
  Problem p;
  p.key = key;
  switch (key) {
    case ProblemKey::kExp:
      p.domain = {{0.0, 10.0}};
      p.constants = {{"t0", 0.0}, {"x0", 1.0}};
      p.has_analytic = true;
      break;
    case ProblemKey::kSho:
      p.domain = {{0.0, 2.0 * M_PI}};
      p.constants = {{"t0", 0.0}, {"x0", 0.0}, {"v0", 1.0}};
      p.has_analytic = true;
      break;
    case ProblemKey::kNlo:
      p.domain = {{0.0, 4.0 * M_PI}};
      p.constants = {{"t0", 0.0}, {"x0", 0.0},     {"v0", 0.5},
                     {"beta", 0.1}, {"omega", 1.0}, {"phi", 1.0},
                     {"epsilon", 0.1}};
      break;
    case ProblemKey::kNas:
      p.output_dim = 2;
      p.domain = {{0.0, 2.0 * M_PI}};
      p.constants = {{"t0", 0.0}, {"x0", 1.0}, {"y0", 0.0}};
      p.has_analytic = true;
      break;
    case ProblemKey::kSir:
      p.output_dim = 3;
      p.domain = {{0.0, 10.0}};
      p.constants = {{"t0", 0.0},  {"s0", 0.99}, {"i0", 0.01}, {"r0", 0.0},
                     {"beta", 3.0}, {"gamma", 1.0}, {"n", 1.0}};
      break;
    case ProblemKey::kPos:
      p.input_dim = 2;
      p.domain = {{0.0, 1.0}, {0.0, 1.0}};
      p.has_analytic = true;
      break;
  }
  for (const auto& [name, value] : overrides) {
    if (!p.constants.count(name))
      throw ConfigError("unknown constant '" + name + "' for problem " +
                        to_string(key));
    p.constants[name] = value;
  }
  return p;
}

Mesh training_mesh(const Problem& p, const std::vector<int>& counts) {
  if (static_cast<int>(counts.size()) != p.input_dim)
    throw std::invalid_argument("training_mesh: counts do not match input_dim");
  return make_mesh(p.domain, counts);
}

Mesh eval_mesh(const Problem& p, const std::vector<int>& train_counts) {
  std::vector<int> counts;
  for (int c : train_counts) counts.push_back(2 * c - 1);
  return make_mesh(p.domain, counts);
}

JetBatch adjust_ic_first_order(const JetBatch& psi, const JetBatch& t,
                               double t0, double x0) {
  JetBatch e = ad::jet_exp(ad::jet_neg(ad::jet_add_scalar(t, -t0)));
  JetBatch w = ad::jet_add_scalar(ad::jet_neg(e), 1.0);
  return ad::jet_add_scalar(ad::jet_mul(w, psi), x0);
}

JetBatch adjust_ic_second_order(const JetBatch& psi, const JetBatch& t,
                                double t0, double x0, double v0) {
  JetBatch e = ad::jet_exp(ad::jet_neg(ad::jet_add_scalar(t, -t0)));
  JetBatch w = ad::jet_add_scalar(ad::jet_neg(e), 1.0);
  JetBatch out = ad::jet_add(ad::jet_scale(w, v0),
                             ad::jet_mul(ad::jet_mul(w, w), psi));
  return ad::jet_add_scalar(out, x0);
}

JetBatch adjust_dirichlet_2d(const JetBatch& psi, const JetBatch& x,
                             const JetBatch& y) {
  JetBatch bx = ad::jet_mul(x, ad::jet_add_scalar(ad::jet_neg(x), 1.0));
  JetBatch by = ad::jet_mul(y, ad::jet_add_scalar(ad::jet_neg(y), 1.0));
  return ad::jet_mul(ad::jet_mul(bx, by), psi);
}

std::vector<JetBatch> adjust_conditions(const Problem& p,
                                        const std::vector<JetBatch>& coords,
                                        const std::vector<JetBatch>& heads) {
  if (static_cast<int>(heads.size()) != p.output_dim)
    throw std::invalid_argument("adjust_conditions: head count mismatch");
  switch (p.key) {
    case ProblemKey::kExp:
      return {adjust_ic_first_order(heads[0], coords[0], p.c("t0"), p.c("x0"))};
    case ProblemKey::kSho:
    case ProblemKey::kNlo:
      return {adjust_ic_second_order(heads[0], coords[0], p.c("t0"),
                                     p.c("x0"), p.c("v0"))};
    case ProblemKey::kNas:
      return {adjust_ic_first_order(heads[0], coords[0], p.c("t0"), p.c("x0")),
              adjust_ic_first_order(heads[1], coords[0], p.c("t0"), p.c("y0"))};
    case ProblemKey::kSir:
      return {adjust_ic_first_order(heads[0], coords[0], p.c("t0"), p.c("s0")),
              adjust_ic_first_order(heads[1], coords[0], p.c("t0"), p.c("i0")),
              adjust_ic_first_order(heads[2], coords[0], p.c("t0"), p.c("r0"))};
    case ProblemKey::kPos:
      return {adjust_dirichlet_2d(heads[0], coords[0], coords[1])};
  }
  throw std::logic_error("unknown problem key");
}

std::vector<Var> build_lhs(const Problem& p,
                           const std::vector<JetBatch>& coords,
                           const std::vector<JetBatch>& adjusted) {
  if (static_cast<int>(adjusted.size()) != p.output_dim)
    throw std::invalid_argument("build_lhs: adjusted head count mismatch");
  switch (p.key) {
    case ProblemKey::kExp: {
      const JetBatch& x = adjusted[0];
      return {ad::add(x.d1[0], x.v)};
    }
    case ProblemKey::kSho: {
      const JetBatch& x = adjusted[0];
      return {ad::add(x.d2[0], x.v)};
    }
    case ProblemKey::kNlo: {
      const JetBatch& x = adjusted[0];
      Var r = ad::add(x.d2[0], ad::scale(x.d1[0], 2.0 * p.c("beta")));
      r = ad::add(r, ad::scale(x.v, p.c("omega") * p.c("omega")));
      r = ad::add(r, ad::scale(ad::powi(x.v, 2), p.c("phi")));
      r = ad::add(r, ad::scale(ad::powi(x.v, 3), p.c("epsilon")));
      return {r};
    }
    case ProblemKey::kNas: {
      const Var t = coords[0].v;
      const JetBatch& x = adjusted[0];
      const JetBatch& y = adjusted[1];
      return {ad::add(x.d1[0], ad::mul(t, y.v)),
              ad::sub(y.d1[0], ad::mul(t, x.v))};
    }
    case ProblemKey::kSir: {
      const JetBatch& s = adjusted[0];
      const JetBatch& i = adjusted[1];
      const JetBatch& r = adjusted[2];
      const double rate = p.c("beta") / p.c("n");
      Var infection = ad::scale(ad::mul(i.v, s.v), rate);
      return {ad::add(s.d1[0], infection),
              ad::add(ad::sub(i.d1[0], infection), ad::scale(i.v, p.c("gamma"))),
              ad::sub(r.d1[0], ad::scale(i.v, p.c("gamma")))};
    }
    case ProblemKey::kPos: {
      const JetBatch& u = adjusted[0];
      const Mat& x = coords[0].v.value();
      const Mat& y = coords[1].v.value();
      Mat f(1, x.cols());
      for (int j = 0; j < x.cols(); ++j) f(0, j) = pos_source(x(0, j), y(0, j));
      Var source = u.v.tape()->constant(std::move(f));
      return {ad::sub(ad::add(u.d2[0], u.d2[1]), source)};
    }
  }
  throw std::logic_error("unknown problem key");
}

Mat adjust_values(const Problem& p, const Mat& X, const Mat& psi) {
  if (psi.rows() != p.output_dim || X.cols() != psi.cols())
    throw std::invalid_argument("adjust_values: shape mismatch");
  Mat out(psi.rows(), psi.cols());
  switch (p.key) {
    case ProblemKey::kExp:
    case ProblemKey::kNas:
    case ProblemKey::kSir: {
      std::vector<double> x0;
      if (p.key == ProblemKey::kExp) x0 = {p.c("x0")};
      if (p.key == ProblemKey::kNas) x0 = {p.c("x0"), p.c("y0")};
      if (p.key == ProblemKey::kSir) x0 = {p.c("s0"), p.c("i0"), p.c("r0")};
      const double t0 = p.c("t0");
      for (int j = 0; j < X.cols(); ++j) {
        const double w = 1.0 - std::exp(-(X(0, j) - t0));
        for (int d = 0; d < p.output_dim; ++d)
          out(d, j) = x0[d] + w * psi(d, j);
      }
      break;
    }
    case ProblemKey::kSho:
    case ProblemKey::kNlo: {
      const double t0 = p.c("t0"), x0 = p.c("x0"), v0 = p.c("v0");
      for (int j = 0; j < X.cols(); ++j) {
        const double w = 1.0 - std::exp(-(X(0, j) - t0));
        out(0, j) = x0 + v0 * w + w * w * psi(0, j);
      }
      break;
    }
    case ProblemKey::kPos:
      for (int j = 0; j < X.cols(); ++j) {
        const double x = X(0, j), y = X(1, j);
        out(0, j) = x * (1.0 - x) * y * (1.0 - y) * psi(0, j);
      }
      break;
  }
  return out;
}

Mat analytic_solution(const Problem& p, const Mat& X) {
  if (!p.has_analytic)
    throw std::logic_error("analytic_solution: " + to_string(p.key) +
                           " has no closed form (oracle-only problem)");
  Mat out(p.output_dim, X.cols());
  switch (p.key) {
    case ProblemKey::kExp:
      out = (-X.row(0).array()).exp();
      break;
    case ProblemKey::kSho:
      out = X.row(0).array().sin();
      break;
    case ProblemKey::kNas:
      out.row(0) = (X.row(0).array().square() / 2.0).cos();
      out.row(1) = (X.row(0).array().square() / 2.0).sin();
      break;
    case ProblemKey::kPos:
      for (int j = 0; j < X.cols(); ++j) {
        const double x = X(0, j), y = X(1, j);
        out(0, j) = x * (1.0 - x) * y * (1.0 - y) * std::exp(x - y);
      }
      break;
    default:
      throw std::logic_error("analytic_solution: unreachable");
  }
  return out;
}

double pos_source(double x, double y) {
  return 2.0 * x * (y - 1.0) * (y - 2.0 * x + x * y + 2.0) * std::exp(x - y);
}

}  // namespace deqgan
