#pragma once

#include "deqgan/problems.hpp"

#include <functional>

namespace deqgan {

/// Initial value problem in explicit first-order form.
struct IvpSpec {
  std::function<Vec(double, const Vec&)> rhs;
  Vec x0;
  double t_start = 0.0;
  double t_end = 1.0;
};

/// First-order reduction of an ODE problem (SHO/NLO become 2-D systems
/// with state [x, v]). POS has no IVP form; asking for one throws.
IvpSpec ivp_for(const Problem& p);

/// Classic fixed-step RK4 over n_steps equal steps; returns the state at
/// every step endpoint, one column per endpoint (n_steps + 1 columns).
/// Aborts with the step index if the state leaves the finite range.
Mat rk4_solve(const IvpSpec& spec, int n_steps);

/// Adaptive Dormand-Prince 5(4) solution with quartic dense output.
class DenseSolution {
 public:
  /// Interpolated state at time t (clamped to the integration interval).
  Vec eval(double t) const;
  /// Analytic time derivative of the interpolant at t.
  Vec eval_derivative(double t) const;
  Mat eval(const Mat& times) const;             // dim x m
  Mat eval_derivative(const Mat& times) const;  // dim x m

  std::size_t step_count() const { return steps_.size(); }

 private:
  friend DenseSolution rk45_solve(const IvpSpec&, double, double);
  struct Step {
    double t0, h;
    Vec y0;
    std::vector<Vec> k;  // 7 stage derivatives (FSAL)
  };
  std::vector<Step> steps_;
  double t_start_ = 0.0, t_end_ = 0.0;
};

DenseSolution rk45_solve(const IvpSpec& spec, double rtol, double atol);

/// Second-order finite-difference Poisson solve (5-point stencil,
/// homogeneous Dirichlet boundary) on an n x n endpoint-inclusive grid,
/// h = 1/(n-1), interior unknowns solved by conjugate gradients.
struct FdResult {
  Mat u;  // n x n grid values, u(i, j) at (x_i, y_j), boundary included
  int iterations = 0;
  double residual_norm = 0.0;
  std::vector<double> checkpoint_residuals;  // recomputed every 50 iterations
};

FdResult fd_poisson_solve(const std::function<double(double, double)>& source,
                          int n);

/// Per-problem ground truth values on a mesh. Closed-form problems are
/// always available; NLO and SIR come from an RK45 cache file
/// (header JSON + flat 64-bit floats) under `cache_dir`, regenerated
/// when `generate_if_missing` is set. Returns nullopt when the truth is
/// unavailable.
std::optional<Mat> ground_truth(const Problem& p, const Mesh& mesh,
                                const std::string& cache_dir,
                                bool generate_if_missing);

/// Tolerance used for ground-truth integrations.
inline constexpr double kTruthRtol = 1e-10;
inline constexpr double kTruthAtol = 1e-10;

std::string truth_cache_path(const Problem& p, const Mesh& mesh,
                             const std::string& cache_dir);

/// Cache directory resolution: DEQGAN_CACHE_DIR overrides the supplied
/// default ("deqgan_cache" when empty).
std::string resolve_cache_dir(const std::string& configured);

}  // namespace deqgan
