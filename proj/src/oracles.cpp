#include "deqgan/oracles.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace deqgan {

IvpSpec ivp_for(const Problem& p) {
  IvpSpec spec;
  spec.t_start = p.domain[0].first;
  spec.t_end = p.domain[0].second;
  switch (p.key) {
    case ProblemKey::kExp:
      spec.x0 = Vec::Constant(1, p.c("x0"));
      spec.rhs = [](double, const Vec& x) { return Vec(-x); };
      break;
    case ProblemKey::kSho:
      spec.x0 = Vec(2);
      spec.x0 << p.c("x0"), p.c("v0");
      spec.rhs = [](double, const Vec& x) {
        Vec d(2);
        d << x(1), -x(0);
        return d;
      };
      break;
    case ProblemKey::kNlo: {
      spec.x0 = Vec(2);
      spec.x0 << p.c("x0"), p.c("v0");
      const double beta = p.c("beta"), omega = p.c("omega");
      const double phi = p.c("phi"), eps = p.c("epsilon");
      spec.rhs = [=](double, const Vec& x) {
        Vec d(2);
        d(0) = x(1);
        d(1) = -2.0 * beta * x(1) - omega * omega * x(0) - phi * x(0) * x(0) -
               eps * x(0) * x(0) * x(0);
        return d;
      };
      break;
    }
    case ProblemKey::kNas:
      spec.x0 = Vec(2);
      spec.x0 << p.c("x0"), p.c("y0");
      spec.rhs = [](double t, const Vec& x) {
        Vec d(2);
        d << -t * x(1), t * x(0);
        return d;
      };
      break;
    case ProblemKey::kSir: {
      spec.x0 = Vec(3);
      spec.x0 << p.c("s0"), p.c("i0"), p.c("r0");
      const double beta = p.c("beta"), gamma = p.c("gamma"), n = p.c("n");
      spec.rhs = [=](double, const Vec& x) {
        Vec d(3);
        const double infection = beta * x(1) * x(0) / n;
        d << -infection, infection - gamma * x(1), gamma * x(1);
        return d;
      };
      break;
    }
    case ProblemKey::kPos:
      throw std::logic_error("ivp_for: POS is a boundary value problem");
  }
  return spec;
}

Mat rk4_solve(const IvpSpec& spec, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("rk4_solve: n_steps >= 1");
  const double h = (spec.t_end - spec.t_start) / n_steps;
  const int dim = static_cast<int>(spec.x0.size());
  Mat out(dim, n_steps + 1);
  Vec y = spec.x0;
  out.col(0) = y;
  double t = spec.t_start;
  for (int s = 0; s < n_steps; ++s) {
    const Vec k1 = spec.rhs(t, y);
    const Vec k2 = spec.rhs(t + 0.5 * h, y + 0.5 * h * k1);
    const Vec k3 = spec.rhs(t + 0.5 * h, y + 0.5 * h * k2);
    const Vec k4 = spec.rhs(t + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite())
      throw std::runtime_error("rk4_solve: non-finite state at step " +
                               std::to_string(s + 1));
    t = spec.t_start + (s + 1) * h;
    out.col(s + 1) = y;
  }
  return out;
}

namespace dopri {

// Dormand-Prince 5(4) tableau (Hairer, Norsett, Wanner I).
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 5th-order minus embedded 4th-order weights.
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                 e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                 e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

// Quartic dense-output weights b_i(theta).
void interp_weights(double theta, double w[7]) {
  const double x1 = 5.0 * (2558722523.0 - 31403016.0 * theta) / 11282082432.0;
  const double x3 = 100.0 * (882725551.0 - 15701508.0 * theta) / 32700410799.0;
  const double x4 = 25.0 * (443332067.0 - 31403016.0 * theta) / 1880347072.0;
  const double x5 =
      32805.0 * (23143187.0 - 3489224.0 * theta) / 199316789632.0;
  const double x6 = 55.0 * (29972135.0 - 7076736.0 * theta) / 822651844.0;
  const double x7 = 10.0 * (7414447.0 - 829305.0 * theta) / 29380423.0;
  const double tm1 = theta - 1.0;
  const double A = theta * theta * (3.0 - 2.0 * theta);
  const double B = theta * theta * tm1;
  const double C = theta * theta * tm1 * tm1;
  const double D = theta * tm1 * tm1;
  w[0] = A * b1 - C * x1 + D;
  w[1] = 0.0;
  w[2] = A * b3 + C * x3;
  w[3] = A * b4 - C * x4;
  w[4] = A * b5 + C * x5;
  w[5] = A * b6 - C * x6;
  w[6] = B + C * x7;
}

// d/dtheta of the dense-output weights (exact polynomial derivatives).
void interp_weight_derivs(double theta, double w[7]) {
  const double x1 = 5.0 * (2558722523.0 - 31403016.0 * theta) / 11282082432.0;
  const double x3 = 100.0 * (882725551.0 - 15701508.0 * theta) / 32700410799.0;
  const double x4 = 25.0 * (443332067.0 - 31403016.0 * theta) / 1880347072.0;
  const double x5 =
      32805.0 * (23143187.0 - 3489224.0 * theta) / 199316789632.0;
  const double x6 = 55.0 * (29972135.0 - 7076736.0 * theta) / 822651844.0;
  const double x7 = 10.0 * (7414447.0 - 829305.0 * theta) / 29380423.0;
  const double dx1 = 5.0 * -31403016.0 / 11282082432.0;
  const double dx3 = 100.0 * -15701508.0 / 32700410799.0;
  const double dx4 = 25.0 * -31403016.0 / 1880347072.0;
  const double dx5 = 32805.0 * -3489224.0 / 199316789632.0;
  const double dx6 = 55.0 * -7076736.0 / 822651844.0;
  const double dx7 = 10.0 * -829305.0 / 29380423.0;
  const double tm1 = theta - 1.0;
  const double dA = 6.0 * theta * (1.0 - theta);
  const double dB = theta * (3.0 * theta - 2.0);
  const double dC = 2.0 * theta * tm1 * (2.0 * theta - 1.0);
  const double dD = (3.0 * theta - 1.0) * tm1;
  const double C = theta * theta * tm1 * tm1;
  w[0] = dA * b1 - dC * x1 - C * dx1 + dD;
  w[1] = 0.0;
  w[2] = dA * b3 + dC * x3 + C * dx3;
  w[3] = dA * b4 - dC * x4 - C * dx4;
  w[4] = dA * b5 + dC * x5 + C * dx5;
  w[5] = dA * b6 - dC * x6 - C * dx6;
  w[6] = dB + dC * x7 + C * dx7;
}

}  // namespace dopri

DenseSolution rk45_solve(const IvpSpec& spec, double rtol, double atol) {
  if (!(rtol > 0.0) || !(atol > 0.0))
    throw std::invalid_argument("rk45_solve: rtol and atol must be positive");
  using namespace dopri;

  DenseSolution sol;
  sol.t_start_ = spec.t_start;
  sol.t_end_ = spec.t_end;

  const double span = spec.t_end - spec.t_start;
  double t = spec.t_start;
  Vec y = spec.x0;
  Vec f = spec.rhs(t, y);
  double h = span / 100.0;

  const double h_min = span * 1e-14;
  bool done = false;
  while (!done) {
    if (h < h_min)
      throw std::runtime_error("rk45_solve: step size underflow at t = " +
                               std::to_string(t));
    bool last = false;
    if (t + h >= spec.t_end) {
      h = spec.t_end - t;
      last = true;
    }

    std::vector<Vec> k(7);
    k[0] = f;
    k[1] = spec.rhs(t + c2 * h, y + h * (a21 * k[0]));
    k[2] = spec.rhs(t + c3 * h, y + h * (a31 * k[0] + a32 * k[1]));
    k[3] = spec.rhs(t + c4 * h, y + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]));
    k[4] = spec.rhs(t + c5 * h, y + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] +
                                         a54 * k[3]));
    k[5] = spec.rhs(t + h, y + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] +
                                    a64 * k[3] + a65 * k[4]));
    Vec y_new =
        y + h * (b1 * k[0] + b3 * k[2] + b4 * k[3] + b5 * k[4] + b6 * k[5]);
    k[6] = spec.rhs(t + h, y_new);

    Vec err_vec = h * (e1 * k[0] + e3 * k[2] + e4 * k[3] + e5 * k[4] +
                       e6 * k[5] + e7 * k[6]);
    double err = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double scale =
          atol + rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
      const double r = err_vec(i) / scale;
      err += r * r;
    }
    err = std::sqrt(err / static_cast<double>(y.size()));

    if (err <= 1.0) {
      DenseSolution::Step step;
      step.t0 = t;
      step.h = h;
      step.y0 = y;
      step.k = k;
      sol.steps_.push_back(std::move(step));
      t += h;
      y = y_new;
      f = k[6];  // FSAL
      if (!y.allFinite())
        throw std::runtime_error("rk45_solve: non-finite state at t = " +
                                 std::to_string(t));
      done = last;
    }
    const double factor =
        err == 0.0 ? 5.0
                   : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
    h *= factor;
  }
  return sol;
}

Vec DenseSolution::eval(double t) const {
  if (steps_.empty()) throw std::logic_error("DenseSolution: empty");
  t = std::clamp(t, t_start_, t_end_);
  auto it = std::upper_bound(
      steps_.begin(), steps_.end(), t,
      [](double value, const Step& s) { return value < s.t0; });
  const Step& s = it == steps_.begin() ? steps_.front() : *(it - 1);
  const double theta = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
  double w[7];
  dopri::interp_weights(theta, w);
  Vec y = s.y0;
  for (int i = 0; i < 7; ++i)
    if (w[i] != 0.0) y += s.h * w[i] * s.k[i];
  return y;
}

Vec DenseSolution::eval_derivative(double t) const {
  if (steps_.empty()) throw std::logic_error("DenseSolution: empty");
  t = std::clamp(t, t_start_, t_end_);
  auto it = std::upper_bound(
      steps_.begin(), steps_.end(), t,
      [](double value, const Step& s) { return value < s.t0; });
  const Step& s = it == steps_.begin() ? steps_.front() : *(it - 1);
  const double theta = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
  double w[7];
  dopri::interp_weight_derivs(theta, w);
  Vec d = Vec::Zero(s.y0.size());
  for (int i = 0; i < 7; ++i)
    if (w[i] != 0.0) d += w[i] * s.k[i];
  return d;
}

Mat DenseSolution::eval(const Mat& times) const {
  Mat out(steps_.front().y0.size(), times.cols());
  for (int j = 0; j < times.cols(); ++j) out.col(j) = eval(times(0, j));
  return out;
}

Mat DenseSolution::eval_derivative(const Mat& times) const {
  Mat out(steps_.front().y0.size(), times.cols());
  for (int j = 0; j < times.cols(); ++j)
    out.col(j) = eval_derivative(times(0, j));
  return out;
}

namespace {

// Apply the negated 5-point Laplacian to interior unknowns (SPD form).
Mat apply_neg_laplacian(const Mat& u, double h2) {
  const int n = static_cast<int>(u.rows());
  Mat out(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double up = i + 1 < n ? u(i + 1, j) : 0.0;
      const double dn = i - 1 >= 0 ? u(i - 1, j) : 0.0;
      const double rt = j + 1 < n ? u(i, j + 1) : 0.0;
      const double lt = j - 1 >= 0 ? u(i, j - 1) : 0.0;
      out(i, j) = (4.0 * u(i, j) - up - dn - rt - lt) / h2;
    }
  }
  return out;
}

}  // namespace

FdResult fd_poisson_solve(const std::function<double(double, double)>& source,
                          int n) {
  if (n < 3) throw std::invalid_argument("fd_poisson_solve: n >= 3");
  const int m = n - 2;  // interior unknowns per dimension
  const double h = 1.0 / (n - 1);
  const double h2 = h * h;

  // -Lap u = -f  (SPD system over the interior)
  Mat b(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      b(i, j) = -source((i + 1) * h, (j + 1) * h);

  Mat x = Mat::Zero(m, m);
  Mat r = b;  // x = 0 start
  Mat p = r;
  double rs_old = r.squaredNorm();
  const double target = 1e-12;
  const int max_iters = 20 * m * m + 200;
  FdResult result;

  int it = 0;
  while (std::sqrt(rs_old) > target && it < max_iters) {
    const Mat ap = apply_neg_laplacian(p, h2);
    const double alpha = rs_old / p.cwiseProduct(ap).sum();
    x += alpha * p;
    r -= alpha * ap;
    const double rs_new = r.squaredNorm();
    ++it;
    if (it % 50 == 0) {  // recompute the true residual and restart
      r = b - apply_neg_laplacian(x, h2);
      result.checkpoint_residuals.push_back(r.norm());
      rs_old = r.squaredNorm();
      p = r;
      continue;
    }
    p = r + (rs_new / rs_old) * p;
    rs_old = rs_new;
  }
  result.iterations = it;
  result.residual_norm = (b - apply_neg_laplacian(x, h2)).norm();
  if (result.residual_norm > 1e-10)
    throw std::runtime_error(
        "fd_poisson_solve: CG failed to converge, residual " +
        std::to_string(result.residual_norm));

  result.u = Mat::Zero(n, n);
  result.u.block(1, 1, m, m) = x;
  return result;
}

std::string resolve_cache_dir(const std::string& configured) {
  if (const char* env = std::getenv("DEQGAN_CACHE_DIR"); env && *env)
    return env;
  return configured.empty() ? "deqgan_cache" : configured;
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = seed;
  for (std::size_t i = 0; i < len; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t mesh_hash(const Problem& p, const Mesh& mesh) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::string key = to_string(p.key);
  h = fnv1a(key.data(), key.size(), h);
  const double tols[2] = {kTruthRtol, kTruthAtol};
  h = fnv1a(tols, sizeof(tols), h);
  for (const auto& [name, value] : p.constants)
    h = fnv1a(&value, sizeof(value), h);
  h = fnv1a(mesh.points.data(), sizeof(double) * mesh.points.size(), h);
  return h;
}

}  // namespace

std::string truth_cache_path(const Problem& p, const Mesh& mesh,
                             const std::string& cache_dir) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(mesh_hash(p, mesh)));
  return cache_dir + "/" + to_string(p.key) + "_" + buf + ".gt";
}

std::optional<Mat> ground_truth(const Problem& p, const Mesh& mesh,
                                const std::string& cache_dir,
                                bool generate_if_missing) {
  if (p.has_analytic) return analytic_solution(p, mesh.points);

  const std::string path = truth_cache_path(p, mesh, cache_dir);
  if (std::ifstream in(path, std::ios::binary); in) {
    std::string header;
    std::getline(in, header);
    const auto meta = nlohmann::json::parse(header);
    const int rows = meta.at("output_dim").get<int>();
    const int cols = meta.at("points").get<int>();
    if (cols != mesh.size())
      throw std::runtime_error("truth cache mismatch: " + path);
    Mat values(rows, cols);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(sizeof(double) * values.size()));
    if (!in) throw std::runtime_error("truth cache truncated: " + path);
    return values;
  }
  if (!generate_if_missing) return std::nullopt;

  const DenseSolution sol = rk45_solve(ivp_for(p), kTruthRtol, kTruthAtol);
  Mat values = sol.eval(mesh.points);
  // first-order solutions carry the full state; keep the solution heads
  values.conservativeResize(p.output_dim, values.cols());

  std::filesystem::create_directories(cache_dir);
  nlohmann::json meta;
  meta["problem"] = to_string(p.key);
  meta["rtol"] = kTruthRtol;
  meta["atol"] = kTruthAtol;
  meta["output_dim"] = p.output_dim;
  meta["points"] = mesh.size();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << meta.dump() << "\n";
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(sizeof(double) * values.size()));
  }
  std::filesystem::rename(tmp, path);
  return values;
}

}  // namespace deqgan
