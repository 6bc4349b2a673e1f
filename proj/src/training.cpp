#include "deqgan/training.hpp"

#include <chrono>
#include <cmath>

namespace deqgan {

using ad::JetBatch;
using ad::Tape;
using ad::Var;

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kGan: return "gan";
    case LossKind::kL1: return "l1";
    case LossKind::kL2: return "l2";
    case LossKind::kHuber: return "huber";
  }
  throw std::logic_error("unknown loss kind");
}

LossKind loss_kind_from(const std::string& name) {
  if (name == "gan") return LossKind::kGan;
  if (name == "l1") return LossKind::kL1;
  if (name == "l2") return LossKind::kL2;
  if (name == "huber") return LossKind::kHuber;
  throw ConfigError("unknown loss kind: " + name);
}

TrainConfig gan_preset(ProblemKey key) {
  TrainConfig c;
  c.problem = key;
  c.loss = LossKind::kGan;
  switch (key) {
    case ProblemKey::kExp:
      c.iterations = 2000;
      c.mesh_counts = {100};
      c.g_units = 30; c.g_layers = 2;
      c.d_units = 20; c.d_layers = 4;
      c.lr_g = 0.008; c.lr_d = 0.0005;
      c.g_beta1 = 0.671; c.g_beta2 = 0.143;
      c.d_beta1 = 0.866; c.d_beta2 = 0.165;
      c.gamma = 0.991;
      break;
    case ProblemKey::kSho:
      c.iterations = 10000;
      c.mesh_counts = {400};
      c.g_units = 40; c.g_layers = 4;
      c.d_units = 40; c.d_layers = 2;
      c.lr_g = 0.009; c.lr_d = 0.002;
      c.g_beta1 = 0.444; c.g_beta2 = 0.633;
      c.d_beta1 = 0.271; c.d_beta2 = 0.142;
      c.gamma = 0.998;
      break;
    case ProblemKey::kNlo:
      c.iterations = 20000;
      c.mesh_counts = {400};
      c.g_units = 40; c.g_layers = 4;
      c.d_units = 30; c.d_layers = 3;
      c.lr_g = 0.006; c.lr_d = 0.0007;
      c.g_beta1 = 0.102; c.g_beta2 = 0.763;
      c.d_beta1 = 0.541; c.d_beta2 = 0.677;
      c.gamma = 0.999;
      break;
    case ProblemKey::kNas:
      c.iterations = 50000;
      c.mesh_counts = {800};
      c.g_units = 30; c.g_layers = 3;
      c.d_units = 50; c.d_layers = 2;
      c.lr_g = 0.006; c.lr_d = 0.001;
      c.g_beta1 = 0.706; c.g_beta2 = 0.861;
      c.d_beta1 = 0.538; c.d_beta2 = 0.615;
      c.gamma = 0.9998;
      break;
    case ProblemKey::kSir:
      c.iterations = 30000;
      c.mesh_counts = {800};
      c.g_units = 40; c.g_layers = 2;
      c.d_units = 20; c.d_layers = 3;
      c.lr_g = 0.010; c.lr_d = 0.002;
      c.g_beta1 = 0.207; c.g_beta2 = 0.169;
      c.d_beta1 = 0.193; c.d_beta2 = 0.617;
      c.gamma = 0.9996;
      break;
    case ProblemKey::kPos:
      c.iterations = 4000;
      c.mesh_counts = {32, 32};
      c.g_units = 40; c.g_layers = 4;
      c.d_units = 20; c.d_layers = 4;
      c.lr_g = 0.008; c.lr_d = 0.002;
      c.g_beta1 = 0.410; c.g_beta2 = 0.447;
      c.d_beta1 = 0.593; c.d_beta2 = 0.915;
      c.gamma = 0.996;
      break;
  }
  return c;
}

TrainConfig classical_preset(ProblemKey key, LossKind loss) {
  if (loss == LossKind::kGan)
    throw ConfigError("classical_preset: use gan_preset for the GAN loss");
  TrainConfig c = gan_preset(key);
  c.loss = loss;
  c.d_units = 0;
  c.d_layers = 0;
  c.lr_d = 0.0;
  c.g_beta1 = 0.9;
  c.g_beta2 = 0.999;
  c.d_beta1 = c.d_beta2 = 0.0;
  switch (key) {
    case ProblemKey::kExp:
      c.iterations = 6000;
      c.lr_g = 0.01;
      c.gamma = 0.9995;
      break;
    case ProblemKey::kSho:
      c.iterations = 15000;
      c.lr_g = 0.005;
      c.gamma = 0.9998;
      break;
    case ProblemKey::kNlo:
      c.iterations = 20000;
      c.lr_g = 0.005;
      c.gamma = 0.9998;
      break;
    case ProblemKey::kNas:
      c.iterations = 30000;
      c.lr_g = 0.003;
      c.gamma = 0.9999;
      break;
    case ProblemKey::kSir:
      c.iterations = 20000;
      c.lr_g = 0.005;
      c.gamma = 0.9998;
      break;
    case ProblemKey::kPos:
      c.iterations = 6000;
      c.lr_g = 0.01;
      c.gamma = 0.9995;
      break;
  }
  return c;
}

Mat perturb_mesh(const Mesh& mesh, double tau, Rng& rng, bool variance_mode) {
  if (!(tau > 0.0)) throw std::invalid_argument("perturb_mesh: tau > 0");
  Mat pts = mesh.points;
  if (std::isinf(tau)) return pts;
  for (int d = 0; d < mesh.dims(); ++d) {
    const double ratio = mesh.spacing[d] / tau;
    const double sd = variance_mode ? std::sqrt(ratio) : ratio;
    const auto [lo, hi] = mesh.bounds[d];
    for (int j = 0; j < pts.cols(); ++j)
      pts(d, j) = std::clamp(pts(d, j) + sd * rng.normal(), lo, hi);
  }
  return pts;
}

std::vector<double> moving_average(const std::vector<double>& series,
                                   int window) {
  if (window < 1) throw std::invalid_argument("moving_average: window >= 1");
  std::vector<double> out(series.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    acc += series[i];
    if (i >= static_cast<std::size_t>(window)) acc -= series[i - window];
    const double n = std::min<std::size_t>(i + 1, window);
    out[i] = acc / n;
  }
  return out;
}

double evaluate_mse(const Mlp& generator, const Problem& p, const Mesh& mesh,
                    const Mat& truth) {
  const Mat psi = forward_plain(generator, mesh.points);
  const Mat adjusted = adjust_values(p, mesh.points, psi);
  return (adjusted - truth).squaredNorm() /
         static_cast<double>(adjusted.size());
}

namespace {

struct ResidualBatch {
  Var lhs;  // output_dim x m residual values
};

// Shared forward path: lift, generator jets, condition transform, LHS.
ResidualBatch build_residual(Tape& tape, const Problem& problem,
                             StagedMlp& staged_g, const Mat& points) {
  JetBatch input = ad::lift_input(tape, points);
  JetBatch out = forward(staged_g, input);

  std::vector<JetBatch> coords;
  for (int d = 0; d < problem.input_dim; ++d)
    coords.push_back(ad::lift_coordinate(tape, points, d));
  std::vector<JetBatch> heads;
  for (int d = 0; d < problem.output_dim; ++d)
    heads.push_back(ad::jet_row(out, d));

  const auto adjusted = adjust_conditions(problem, coords, heads);
  auto residuals = build_lhs(problem, coords, adjusted);

  ResidualBatch batch;
  if (residuals.size() == 1)
    batch.lhs = residuals[0];
  else if (residuals.size() == 2)
    batch.lhs = ad::vstack(residuals[0], residuals[1]);
  else
    batch.lhs = ad::vstack(residuals[0], residuals[1], residuals[2]);
  return batch;
}

}  // namespace

GanTrainer::GanTrainer(const TrainConfig& cfg, std::optional<Mat> eval_truth)
    : cfg_(cfg),
      problem_(make_problem(cfg.problem, cfg.constant_overrides)),
      mesh_(training_mesh(problem_, cfg.mesh_counts)),
      eval_mesh_(eval_mesh(problem_, cfg.mesh_counts)),
      truth_(std::move(eval_truth)),
      g_(make_mlp(problem_.input_dim, problem_.output_dim, cfg.g_units,
                  cfg.g_layers, cfg.residual, derive_seed(cfg.seed, 1))),
      d_(make_mlp(problem_.output_dim, 1, cfg.d_units, cfg.d_layers,
                  cfg.residual, derive_seed(cfg.seed, 2))),
      d_spectral_(SpectralState::for_net(d_, derive_seed(cfg.seed, 3))),
      perturb_rng_(derive_seed(cfg.perturb_seed.value_or(cfg.seed), 4)) {
  g_opt_.alpha = cfg.lr_g;
  g_opt_.beta1 = cfg.g_beta1;
  g_opt_.beta2 = cfg.g_beta2;
  d_opt_.alpha = cfg.lr_d;
  d_opt_.beta1 = cfg.d_beta1;
  d_opt_.beta2 = cfg.d_beta2;
  if (truth_ && (truth_->rows() != problem_.output_dim ||
                 truth_->cols() != eval_mesh_.size()))
    throw std::invalid_argument("GanTrainer: truth shape mismatch");
}

GanTrainer::StepLosses GanTrainer::step(bool update_g, bool update_d) {
  const Mat points =
      perturb_mesh(mesh_, cfg_.tau, perturb_rng_, cfg_.perturb_variance);

  Tape tape;
  StagedMlp sg = stage(tape, g_, "g");
  ResidualBatch batch = build_residual(tape, problem_, sg, points);

  StagedMlp sd = cfg_.spectral_norm
                     ? stage_spectral(tape, d_, d_spectral_, "d")
                     : stage(tape, d_, "d");
  Var z_fake = forward_values(sd, batch.lhs);
  Var z_real = forward_values(
      sd, tape.constant(Mat::Zero(problem_.output_dim, points.cols())));

  // Losses in logit space: log sigma(z) = -softplus(-z),
  // log(1 - sigma(z)) = -softplus(z).
  Var g_loss_var = cfg_.non_saturating
                       ? ad::mean(ad::softplus(ad::neg(z_fake)))
                       : ad::neg(ad::mean(ad::softplus(z_fake)));
  Var d_obj_var = ad::neg(ad::add(ad::mean(ad::softplus(ad::neg(z_real))),
                                  ad::mean(ad::softplus(z_fake))));

  StepLosses losses{g_loss_var.value()(0, 0), d_obj_var.value()(0, 0)};
  if (!std::isfinite(losses.g_loss) || !std::isfinite(losses.d_loss))
    throw TrainingError("non-finite loss", iteration_, "");

  const ad::GradientMap g_grads = tape.backward(g_loss_var);
  const ad::GradientMap d_grads = tape.backward(d_obj_var);

  try {
    if (update_g) adam_step(named_params(g_, "g"), g_grads, g_opt_, false);
    if (update_d) adam_step(named_params(d_, "d"), d_grads, d_opt_, true);
  } catch (const TrainingError& e) {
    throw TrainingError(e.what(), iteration_, e.param);
  }
  if (!g_.all_finite() || !d_.all_finite())
    throw TrainingError("non-finite weights after update", iteration_, "");

  decay_lr(g_opt_, cfg_.gamma);
  decay_lr(d_opt_, cfg_.gamma_d.value_or(cfg_.gamma));
  ++iteration_;
  return losses;
}

double GanTrainer::evaluate() const {
  if (!truth_) return std::numeric_limits<double>::quiet_NaN();
  return evaluate_mse(g_, problem_, eval_mesh_, *truth_);
}

ClassicalTrainer::ClassicalTrainer(const TrainConfig& cfg,
                                   std::optional<Mat> eval_truth)
    : cfg_(cfg),
      problem_(make_problem(cfg.problem, cfg.constant_overrides)),
      mesh_(training_mesh(problem_, cfg.mesh_counts)),
      eval_mesh_(eval_mesh(problem_, cfg.mesh_counts)),
      truth_(std::move(eval_truth)),
      g_(make_mlp(problem_.input_dim, problem_.output_dim, cfg.g_units,
                  cfg.g_layers, cfg.residual, derive_seed(cfg.seed, 1))),
      perturb_rng_(derive_seed(cfg.perturb_seed.value_or(cfg.seed), 4)) {
  if (cfg.loss == LossKind::kGan)
    throw ConfigError("ClassicalTrainer: loss must be l1, l2 or huber");
  g_opt_.alpha = cfg.lr_g;
  g_opt_.beta1 = cfg.g_beta1;
  g_opt_.beta2 = cfg.g_beta2;
}

double ClassicalTrainer::step() {
  const Mat points =
      perturb_mesh(mesh_, cfg_.tau, perturb_rng_, cfg_.perturb_variance);

  Tape tape;
  StagedMlp sg = stage(tape, g_, "g");
  ResidualBatch batch = build_residual(tape, problem_, sg, points);

  Var loss_var;
  switch (cfg_.loss) {
    case LossKind::kL1: loss_var = ad::mean(ad::abs(batch.lhs)); break;
    case LossKind::kL2: loss_var = ad::mean(ad::powi(batch.lhs, 2)); break;
    case LossKind::kHuber: loss_var = ad::mean(ad::huber(batch.lhs, 1.0)); break;
    case LossKind::kGan: throw std::logic_error("unreachable");
  }
  const double loss = loss_var.value()(0, 0);
  if (!std::isfinite(loss))
    throw TrainingError("non-finite loss", iteration_, "");

  const ad::GradientMap grads = tape.backward(loss_var);
  try {
    adam_step(named_params(g_, "g"), grads, g_opt_, false);
  } catch (const TrainingError& e) {
    throw TrainingError(e.what(), iteration_, e.param);
  }
  if (!g_.all_finite())
    throw TrainingError("non-finite weights after update", iteration_, "");

  decay_lr(g_opt_, cfg_.gamma);
  ++iteration_;
  return loss;
}

double ClassicalTrainer::evaluate() const {
  if (!truth_) return std::numeric_limits<double>::quiet_NaN();
  return evaluate_mse(g_, problem_, eval_mesh_, *truth_);
}

namespace {

void finalize_record(RunRecord& record) {
  record.mse_smoothed = moving_average(record.mse_raw);
  double best = std::numeric_limits<double>::quiet_NaN();
  for (double v : record.mse_smoothed)
    if (std::isfinite(v) && !(v >= best)) best = v;  // NaN-safe min
  record.final_mse = best;
}

}  // namespace

TrainResult train_run(const TrainConfig& cfg, std::optional<Mat> eval_truth) {
  const auto started = std::chrono::steady_clock::now();
  TrainResult result;
  result.record.config = cfg;
  result.record.truth_available = eval_truth.has_value();
  RunRecord& rec = result.record;

  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         started)
        .count();
  };

  if (cfg.loss == LossKind::kGan) {
    GanTrainer trainer(cfg, std::move(eval_truth));
    try {
      for (long i = 0; i < cfg.iterations; ++i) {
        const auto losses = trainer.step();
        rec.g_loss.push_back(losses.g_loss);
        rec.d_loss.push_back(losses.d_loss);
        rec.mse_raw.push_back(trainer.evaluate());
      }
    } catch (const TrainingError& e) {
      rec.status = "failed";
      rec.failure = e.what();
      rec.failed_iteration = e.iteration;
    }
    result.generator = trainer.generator();
    result.discriminator = trainer.discriminator();
  } else {
    ClassicalTrainer trainer(cfg, std::move(eval_truth));
    try {
      for (long i = 0; i < cfg.iterations; ++i) {
        rec.g_loss.push_back(trainer.step());
        rec.d_loss.push_back(std::numeric_limits<double>::quiet_NaN());
        rec.mse_raw.push_back(trainer.evaluate());
      }
    } catch (const TrainingError& e) {
      rec.status = "failed";
      rec.failure = e.what();
      rec.failed_iteration = e.iteration;
    }
    result.generator = trainer.generator();
  }

  finalize_record(rec);
  rec.wall_seconds = elapsed();
  return result;
}

TrainResult train_run_auto(const TrainConfig& cfg,
                           const std::string& cache_dir) {
  const Problem problem = make_problem(cfg.problem, cfg.constant_overrides);
  const Mesh eval = eval_mesh(problem, cfg.mesh_counts);
  std::optional<Mat> truth = ground_truth(
      problem, eval, resolve_cache_dir(cache_dir), /*generate_if_missing=*/true);
  return train_run(cfg, std::move(truth));
}

std::vector<TrainResult> run_trials(const TrainConfig& cfg, int n_trials,
                                    const std::string& cache_dir) {
  std::vector<TrainResult> results;
  for (int t = 0; t < n_trials; ++t) {
    TrainConfig c = cfg;
    c.seed = static_cast<std::uint64_t>(t);
    c.perturb_seed = static_cast<std::uint64_t>(t);
    results.push_back(train_run_auto(c, cache_dir));
  }
  return results;
}

}  // namespace deqgan
