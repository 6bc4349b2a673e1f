#pragma once

#include "deqgan/net.hpp"
#include "deqgan/optim.hpp"
#include "deqgan/oracles.hpp"

namespace deqgan {

enum class LossKind { kGan, kL1, kL2, kHuber };

std::string to_string(LossKind kind);
LossKind loss_kind_from(const std::string& name);  // "gan", "l1", "l2", "huber"

struct TrainConfig {
  ProblemKey problem = ProblemKey::kExp;
  LossKind loss = LossKind::kGan;
  long iterations = 0;
  std::vector<int> mesh_counts;  // per input dimension
  int g_units = 0, g_layers = 0;
  int d_units = 0, d_layers = 0;
  double lr_g = 0.0, lr_d = 0.0;
  double g_beta1 = 0.9, g_beta2 = 0.999;
  double d_beta1 = 0.9, d_beta2 = 0.999;
  double gamma = 1.0;              // shared exponential LR decay
  std::optional<double> gamma_d;   // discriminator override
  double tau = 3.0;                // perturbation precision
  bool perturb_variance = false;   // dt/tau is the variance, not the std
  std::uint64_t seed = 0;          // weight initialization seed
  std::optional<std::uint64_t> perturb_seed;  // defaults to `seed`
  bool residual = true;
  bool spectral_norm = true;
  bool non_saturating = false;     // -log D(LHS) generator objective
  std::map<std::string, double> constant_overrides;
};

/// Table-3 hyperparameters for the given problem (DEQGAN training).
TrainConfig gan_preset(ProblemKey key);

/// Tuned settings for the classical residual-loss trainer.
TrainConfig classical_preset(ProblemKey key, LossKind loss);

struct RunRecord {
  TrainConfig config;
  std::vector<double> g_loss, d_loss, mse_raw, mse_smoothed;
  double final_mse = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
  std::string status = "ok";  // "ok" | "failed"
  std::string failure;
  long failed_iteration = -1;
  bool truth_available = false;
};

struct TrainResult {
  RunRecord record;
  Mlp generator;
  Mlp discriminator;  // default-constructed for classical runs
};

/// Each mesh point gets independent Gaussian noise per coordinate with
/// standard deviation spacing/tau (or sqrt(spacing/tau) in variance
/// mode), clamped to the domain. tau = +inf returns the mesh unchanged.
Mat perturb_mesh(const Mesh& mesh, double tau, Rng& rng,
                 bool variance_mode = false);

/// Trailing simple moving average; the first window-1 entries average
/// the available prefix.
std::vector<double> moving_average(const std::vector<double>& series,
                                   int window = 50);

/// Mean over mesh points and output dimensions of the squared gap
/// between the adjusted prediction and the ground truth. Never used in
/// any gradient: training is fully unsupervised.
double evaluate_mse(const Mlp& generator, const Problem& p, const Mesh& mesh,
                    const Mat& truth);

/// One DEQGAN training run. Holds both nets and optimizer state; step()
/// performs one full-batch iteration of the adversarial game.
class GanTrainer {
 public:
  GanTrainer(const TrainConfig& cfg, std::optional<Mat> eval_truth);

  struct StepLosses {
    double g_loss, d_loss;
  };
  /// Perturb the mesh, forward the generator with jets, adjust for
  /// conditions, build the residual batch, score it against the zero
  /// batch, then update the generator (descent) and the discriminator
  /// (ascent) from gradients taken against the same residual batch.
  StepLosses step(bool update_g = true, bool update_d = true);

  double evaluate() const;  // validation MSE, NaN when truth is absent

  Mlp& generator() { return g_; }
  Mlp& discriminator() { return d_; }
  const Problem& problem() const { return problem_; }
  const Mesh& mesh() const { return mesh_; }
  long iteration() const { return iteration_; }

 private:
  TrainConfig cfg_;
  Problem problem_;
  Mesh mesh_, eval_mesh_;
  std::optional<Mat> truth_;
  Mlp g_, d_;
  SpectralState d_spectral_;
  AdamState g_opt_, d_opt_;
  Rng perturb_rng_;
  long iteration_ = 0;
};

/// Classical residual minimization (L1 / L2 / Huber against zero).
class ClassicalTrainer {
 public:
  ClassicalTrainer(const TrainConfig& cfg, std::optional<Mat> eval_truth);

  double step();  // returns the training loss
  double evaluate() const;

  Mlp& generator() { return g_; }
  const Problem& problem() const { return problem_; }
  long iteration() const { return iteration_; }

 private:
  TrainConfig cfg_;
  Problem problem_;
  Mesh mesh_, eval_mesh_;
  std::optional<Mat> truth_;
  Mlp g_;
  AdamState g_opt_;
  Rng perturb_rng_;
  long iteration_ = 0;
};

/// Full training loop producing the run record (losses, per-iteration
/// validation MSE, min-of-smoothed-series final MSE). Training failures
/// (non-finite loss or gradient) flush a truncated record with
/// status = "failed" instead of propagating.
TrainResult train_run(const TrainConfig& cfg, std::optional<Mat> eval_truth);

/// Resolves the problem's ground truth on the validation mesh first
/// (auto-generating the RK45 cache for NLO/SIR), then trains.
TrainResult train_run_auto(const TrainConfig& cfg,
                           const std::string& cache_dir);

/// Five-trial protocol: weight seeds {0..n-1}, perturbation stream
/// seeded by the trial index.
std::vector<TrainResult> run_trials(const TrainConfig& cfg, int n_trials,
                                    const std::string& cache_dir);

}  // namespace deqgan
