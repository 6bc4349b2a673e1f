#pragma once

#include "deqgan/jet.hpp"

#include <map>
#include <optional>

namespace deqgan {

enum class ProblemKey { kExp, kSho, kNlo, kNas, kSir, kPos };

std::string to_string(ProblemKey key);
ProblemKey problem_key_from(const std::string& name);  // "exp", "sho", ...

/// Endpoint-inclusive uniform tensor mesh; `points` holds one column
/// per mesh point, coordinates ordered (x fastest) for tensor grids.
struct Mesh {
  Mat points;  // input_dim x m
  std::vector<double> spacing;
  std::vector<int> counts;
  std::vector<std::pair<double, double>> bounds;

  int size() const { return static_cast<int>(points.cols()); }
  int dims() const { return static_cast<int>(points.rows()); }
};

Mesh make_mesh(const std::vector<std::pair<double, double>>& bounds,
               const std::vector<int>& counts);

/// One of the six benchmark differential equations: domain, constants,
/// condition transform and residual builder, plus the closed-form
/// solution where one exists (EXP, SHO, NAS, POS).
struct Problem {
  ProblemKey key;
  int input_dim = 1;
  int output_dim = 1;
  std::vector<std::pair<double, double>> domain;
  std::map<std::string, double> constants;
  bool has_analytic = false;

  double c(const std::string& name) const { return constants.at(name); }
};

Problem make_problem(ProblemKey key,
                     const std::map<std::string, double>& overrides = {});

/// Mesh over the problem domain with the given per-dimension counts.
Mesh training_mesh(const Problem& p, const std::vector<int>& counts);

/// Validation mesh: same bounds, spacing halved (2*m - 1 points per dim).
Mesh eval_mesh(const Problem& p, const std::vector<int>& train_counts);

// Condition transforms (exact at the condition locus for any psi).

/// x0 + (1 - e^{-(t-t0)}) psi; equals x0 exactly at t = t0.
ad::JetBatch adjust_ic_first_order(const ad::JetBatch& psi,
                                   const ad::JetBatch& t, double t0, double x0);

/// x0 + v0 (1 - e^{-(t-t0)}) + (1 - e^{-(t-t0)})^2 psi; value and first
/// derivative at t0 are exactly x0 and v0.
ad::JetBatch adjust_ic_second_order(const ad::JetBatch& psi,
                                    const ad::JetBatch& t, double t0,
                                    double x0, double v0);

/// x(1-x) y(1-y) psi; exactly zero on all four unit-square edges.
ad::JetBatch adjust_dirichlet_2d(const ad::JetBatch& psi,
                                 const ad::JetBatch& x, const ad::JetBatch& y);

/// Apply the problem's condition transform to the generator output heads.
/// `coords` are the lifted input coordinates, one 1 x m jet per dimension;
/// `heads` has one 1 x m jet per output dimension.
std::vector<ad::JetBatch> adjust_conditions(const Problem& p,
                                            const std::vector<ad::JetBatch>& coords,
                                            const std::vector<ad::JetBatch>& heads);

/// Residual vector with every term moved to the left-hand side (the
/// right-hand side is identically zero), one 1 x m node per output dim.
std::vector<ad::Var> build_lhs(const Problem& p,
                               const std::vector<ad::JetBatch>& coords,
                               const std::vector<ad::JetBatch>& adjusted);

/// Value-only transform for evaluation paths (no tape).
Mat adjust_values(const Problem& p, const Mat& X, const Mat& psi);

/// Closed-form solution on a batch of points (output_dim x m).
/// Calling this for NLO or SIR is a contract error.
Mat analytic_solution(const Problem& p, const Mat& X);

/// Poisson source term 2x(y-1)(y-2x+xy+2)e^{x-y}.
double pos_source(double x, double y);

}  // namespace deqgan
