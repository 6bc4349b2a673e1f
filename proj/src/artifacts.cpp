#include "deqgan/artifacts.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

namespace deqgan {

using nlohmann::json;

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string method_name(LossKind kind) {
  switch (kind) {
    case LossKind::kGan: return "DEQGAN";
    case LossKind::kL1: return "L1";
    case LossKind::kL2: return "L2";
    case LossKind::kHuber: return "Huber";
  }
  throw std::logic_error("unknown loss kind");
}

namespace {

json config_to_json(const TrainConfig& c) {
  json j;
  j["problem"] = to_string(c.problem);
  j["loss"] = to_string(c.loss);
  j["iterations"] = c.iterations;
  j["grid"] = c.mesh_counts;
  j["g_units"] = c.g_units;
  j["g_layers"] = c.g_layers;
  j["d_units"] = c.d_units;
  j["d_layers"] = c.d_layers;
  j["lr_g"] = c.lr_g;
  j["lr_d"] = c.lr_d;
  j["g_beta1"] = c.g_beta1;
  j["g_beta2"] = c.g_beta2;
  j["d_beta1"] = c.d_beta1;
  j["d_beta2"] = c.d_beta2;
  j["gamma"] = c.gamma;
  if (c.gamma_d) j["gamma_d"] = *c.gamma_d;
  j["tau"] = c.tau;
  j["perturb_variance"] = c.perturb_variance;
  j["seed"] = c.seed;
  j["perturb_seed"] = c.perturb_seed.value_or(c.seed);
  j["residual"] = c.residual;
  j["spectral_norm"] = c.spectral_norm;
  j["non_saturating"] = c.non_saturating;
  if (!c.constant_overrides.empty()) j["constants"] = c.constant_overrides;
  return j;
}

}  // namespace

void write_run_json(const std::string& path, const RunRecord& record,
                    const std::string& method) {
  json j;
  j["method"] = method;
  j["problem"] = to_string(record.config.problem);
  j["config"] = config_to_json(record.config);
  j["final_mse"] = record.final_mse;
  j["status"] = record.status;
  if (!record.failure.empty()) {
    j["failure"] = record.failure;
    j["failed_iteration"] = record.failed_iteration;
  }
  j["truth_available"] = record.truth_available;
  j["iterations_run"] = record.g_loss.size();
  j["wall_seconds"] = record.wall_seconds;
  j["seeds"] = {{"weights", record.config.seed},
                {"perturbation",
                 record.config.perturb_seed.value_or(record.config.seed)}};
  atomic_write(path, j.dump(2) + "\n");
}

void write_curves_csv(const std::string& path, const RunRecord& record) {
  std::string out = "iteration,g_loss,d_loss,mse_raw,mse_smoothed\n";
  for (std::size_t i = 0; i < record.g_loss.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += format_full(record.g_loss[i]);
    out += ',';
    out += format_full(record.d_loss[i]);
    out += ',';
    out += format_full(record.mse_raw[i]);
    out += ',';
    out += format_full(record.mse_smoothed[i]);
    out += '\n';
  }
  atomic_write(path, out);
}

void write_solution_csv(const std::string& path, const Problem& problem,
                        const Mesh& mesh, const Mat& prediction,
                        const std::optional<Mat>& truth,
                        const Mat& abs_residual) {
  std::string out;
  const std::vector<std::string> coord_names =
      problem.input_dim == 1 ? std::vector<std::string>{"t"}
                             : std::vector<std::string>{"x", "y"};
  for (int d = 0; d < problem.input_dim; ++d) {
    if (d) out += ',';
    out += coord_names[d];
  }
  for (int d = 0; d < problem.output_dim; ++d)
    out += ",pred_" + std::to_string(d);
  for (int d = 0; d < problem.output_dim; ++d)
    out += ",truth_" + std::to_string(d);
  for (int d = 0; d < problem.output_dim; ++d)
    out += ",abs_residual_" + std::to_string(d);
  out += '\n';

  for (int j = 0; j < mesh.size(); ++j) {
    for (int d = 0; d < problem.input_dim; ++d) {
      if (d) out += ',';
      out += format_full(mesh.points(d, j));
    }
    for (int d = 0; d < problem.output_dim; ++d)
      out += "," + format_full(prediction(d, j));
    for (int d = 0; d < problem.output_dim; ++d)
      out += truth ? "," + format_full((*truth)(d, j)) : ",";
    for (int d = 0; d < problem.output_dim; ++d)
      out += "," + format_full(abs_residual(d, j));
    out += '\n';
  }
  atomic_write(path, out);
}

void write_bands_csv(const std::string& path,
                     const std::vector<RunRecord>& records) {
  std::size_t len = 0;
  for (const auto& r : records) len = std::max(len, r.mse_smoothed.size());
  std::string out = "iteration,mse_p25,mse_median,mse_p75\n";
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> column;
    for (const auto& r : records)
      if (i < r.mse_smoothed.size() && std::isfinite(r.mse_smoothed[i]))
        column.push_back(r.mse_smoothed[i]);
    if (column.empty()) continue;
    std::sort(column.begin(), column.end());
    auto quantile = [&](double q) {
      const double pos = q * (column.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(pos);
      const std::size_t hi = std::min(lo + 1, column.size() - 1);
      const double frac = pos - lo;
      return column[lo] * (1.0 - frac) + column[hi] * frac;
    };
    out += std::to_string(i + 1) + ',' + format_full(quantile(0.25)) + ',' +
           format_full(quantile(0.5)) + ',' + format_full(quantile(0.75)) +
           '\n';
  }
  atomic_write(path, out);
}

RunSummary read_run_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j;
  in >> j;
  RunSummary s;
  s.problem = j.at("problem").get<std::string>();
  s.method = j.at("method").get<std::string>();
  if (j.at("final_mse").is_number())
    s.final_mse = j.at("final_mse").get<double>();
  s.status = j.value("status", "ok");
  return s;
}

std::vector<std::string> write_table_csv(const std::string& path,
                                         const std::vector<RunSummary>& runs) {
  const std::vector<std::string> methods = {"L1", "L2", "Huber", "DEQGAN",
                                            "Traditional"};
  const std::vector<std::string> problems = {"exp", "sho", "nlo",
                                             "nas", "sir", "pos"};
  std::map<std::pair<std::string, std::string>, double> cells;
  std::vector<std::string> seen_problems;
  for (const auto& run : runs) {
    if (!std::isfinite(run.final_mse)) continue;
    auto key = std::make_pair(run.problem, run.method);
    auto it = cells.find(key);
    if (it == cells.end() || run.final_mse < it->second)
      cells[key] = run.final_mse;
  }
  for (const auto& p : problems)
    for (const auto& run : runs)
      if (run.problem == p &&
          std::find(seen_problems.begin(), seen_problems.end(), p) ==
              seen_problems.end())
        seen_problems.push_back(p);

  std::vector<std::string> warnings;
  std::string out = "problem";
  for (const auto& m : methods) out += ',' + m;
  out += '\n';
  for (const auto& p : seen_problems) {
    out += p;
    for (const auto& m : methods) {
      out += ',';
      auto it = cells.find({p, m});
      if (it != cells.end())
        out += format_full(it->second);
      else
        warnings.push_back("missing cell: " + p + " / " + m);
    }
    out += '\n';
  }
  atomic_write(path, out);
  return warnings;
}

namespace {

json net_to_json(const Mlp& net) {
  json j;
  j["input_dim"] = net.input_dim;
  j["output_dim"] = net.output_dim;
  j["hidden_units"] = net.hidden_units;
  j["num_layers"] = net.num_layers;
  j["residual"] = net.residual;
  json layers = json::array();
  for (int i = 0; i < net.layer_count(); ++i) {
    json layer;
    layer["shape"] = {net.weights[i].rows(), net.weights[i].cols()};
    json w = json::array();
    for (int r = 0; r < net.weights[i].rows(); ++r) {
      json rowv = json::array();
      for (int c = 0; c < net.weights[i].cols(); ++c)
        rowv.push_back(net.weights[i](r, c));
      w.push_back(rowv);
    }
    layer["w"] = w;
    json b = json::array();
    for (int r = 0; r < net.biases[i].rows(); ++r)
      b.push_back(net.biases[i](r, 0));
    layer["b"] = b;
    layers.push_back(layer);
  }
  j["layers"] = layers;
  return j;
}

void net_from_json(const json& j, Mlp& net) {
  Mlp fresh = make_mlp(j.at("input_dim").get<int>(),
                       j.at("output_dim").get<int>(),
                       j.at("hidden_units").get<int>(),
                       j.at("num_layers").get<int>(),
                       j.at("residual").get<bool>(), 0);
  const auto& layers = j.at("layers");
  if (static_cast<int>(layers.size()) != fresh.layer_count())
    throw std::runtime_error("weight snapshot: layer count mismatch");
  for (int i = 0; i < fresh.layer_count(); ++i) {
    const auto& layer = layers[i];
    const auto shape = layer.at("shape");
    const int rows = shape[0].get<int>(), cols = shape[1].get<int>();
    if (rows != fresh.weights[i].rows() || cols != fresh.weights[i].cols())
      throw std::runtime_error("weight snapshot: shape mismatch at layer " +
                               std::to_string(i));
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        fresh.weights[i](r, c) = layer.at("w")[r][c].get<double>();
    for (int r = 0; r < rows; ++r)
      fresh.biases[i](r, 0) = layer.at("b")[r].get<double>();
  }
  net = std::move(fresh);
}

}  // namespace

void save_weights(const std::string& path, const Mlp& generator,
                  const Mlp* discriminator) {
  json j;
  j["generator"] = net_to_json(generator);
  if (discriminator && discriminator->layer_count() > 0)
    j["discriminator"] = net_to_json(*discriminator);
  atomic_write(path, j.dump() + "\n");
}

void load_weights(const std::string& path, Mlp& generator,
                  Mlp* discriminator) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read weights: " + path);
  json j;
  in >> j;
  net_from_json(j.at("generator"), generator);
  if (discriminator && j.contains("discriminator"))
    net_from_json(j.at("discriminator"), *discriminator);
}

}  // namespace deqgan
