#pragma once

#include "deqgan/search.hpp"

namespace deqgan {

/// Full round-trip decimal formatting (17 significant digits).
std::string format_full(double v);

/// Write-temp-then-rename so artifact files are fully written or absent.
void atomic_write(const std::string& path, const std::string& content);

/// Method column name for the comparison table.
std::string method_name(LossKind kind);

void write_run_json(const std::string& path, const RunRecord& record,
                    const std::string& method);

/// curves.csv: iteration,g_loss,d_loss,mse_raw,mse_smoothed
void write_curves_csv(const std::string& path, const RunRecord& record);

/// solution.csv: eval-mesh inputs, per-head prediction, truth and
/// absolute residual of the predicted solution.
void write_solution_csv(const std::string& path, const Problem& problem,
                        const Mesh& mesh, const Mat& prediction,
                        const std::optional<Mat>& truth,
                        const Mat& abs_residual);

/// bands.csv for multi-trial runs: per-iteration median and quartiles
/// of the smoothed validation MSE.
void write_bands_csv(const std::string& path,
                     const std::vector<RunRecord>& records);

struct RunSummary {
  std::string problem;
  std::string method;
  double final_mse = std::numeric_limits<double>::quiet_NaN();
  std::string status;
};

RunSummary read_run_json(const std::string& path);

/// table.csv rows = problem keys, columns = methods; each cell is the
/// minimum final MSE across the supplied runs. Missing cells stay empty
/// (a warning per cell goes to the returned list).
std::vector<std::string> write_table_csv(const std::string& path,
                                         const std::vector<RunSummary>& runs);

/// Weight snapshots: JSON arrays per layer with a shape header.
void save_weights(const std::string& path, const Mlp& generator,
                  const Mlp* discriminator);
void load_weights(const std::string& path, Mlp& generator, Mlp* discriminator);

}  // namespace deqgan
