#pragma once

#include "deqgan/training.hpp"

namespace deqgan {

/// Sampling space for the stability study: integer seed choices and
/// log-uniform learning-rate ranges layered over a base config.
struct SearchSpace {
  TrainConfig base;
  std::vector<int> seed_choices;
  double lr_low = 1e-6, lr_high = 1e-2;  // log-uniform for both nets
  long steps = 500;
  bool stratify_seeds = false;  // round-robin seeds instead of sampling

  /// Seeds 0..9, both learning rates log-uniform over [1e-6, 1e-2],
  /// 500 steps, everything else pinned to the EXP preset.
  static SearchSpace figure4_preset();
};

struct TrialResult {
  long index = 0;
  TrainConfig config;
  double final_mse = std::numeric_limits<double>::infinity();
  std::string status = "ok";  // "ok" | "failed"
  std::string failure;
};

struct SearchResult {
  std::uint64_t master_seed = 0;
  std::vector<TrialResult> trials;  // ordered by trial index
};

/// Samples n_trials configs deterministically from master_seed, then
/// runs them on a bounded worker pool. Failed runs keep their slot with
/// status "failed" and infinite MSE. Results are invariant to the
/// degree of parallelism.
SearchResult random_search(const SearchSpace& space, long n_trials,
                           std::uint64_t master_seed, int parallelism,
                           const std::string& cache_dir = "");

/// The sampled config for one trial (pure function of master_seed).
TrainConfig sample_trial(const SearchSpace& space, std::uint64_t master_seed,
                         long index, long n_trials);

/// Parallel-coordinates export: one row per trial with
/// seed, lr_g, lr_d, log10_mse, passed_filter (mse <= filter), status.
void export_parallel_coordinates(const SearchResult& result, double mse_filter,
                                 const std::string& path);

}  // namespace deqgan
