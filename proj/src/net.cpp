#include "deqgan/net.hpp"

#include <cmath>

namespace deqgan {

namespace {

bool has_skip(const Mlp& net, int layer) {
  if (!net.residual) return false;
  if (layer == net.layer_count() - 1) return false;  // output projection
  return net.weights[layer].rows() == net.weights[layer].cols();
}

struct PowerStep {
  Vec u, v;
  double sigma;
  bool clamped;
};

PowerStep power_iterate(const Mat& W, const Vec& u_prev) {
  PowerStep p;
  Vec wv = W.transpose() * u_prev;
  double n = wv.norm();
  p.v = n > 1e-300 ? Vec(wv / n) : Vec(Vec::Unit(W.cols(), 0));
  Vec wu = W * p.v;
  n = wu.norm();
  p.u = n > 1e-300 ? Vec(wu / n) : Vec(Vec::Unit(W.rows(), 0));
  p.sigma = p.u.dot(W * p.v);
  p.clamped = p.sigma < 1e-12;
  if (p.clamped) p.sigma = 1e-12;
  return p;
}

}  // namespace

bool Mlp::all_finite() const {
  for (const Mat& W : weights)
    if (!W.allFinite()) return false;
  for (const Mat& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

Mlp make_mlp(int input_dim, int output_dim, int hidden_units, int num_layers,
             bool residual, std::uint64_t seed) {
  if (input_dim < 1 || output_dim < 1 || hidden_units < 1 || num_layers < 1)
    throw std::invalid_argument("make_mlp: dimensions must be positive");
  Mlp net;
  net.input_dim = input_dim;
  net.output_dim = output_dim;
  net.hidden_units = hidden_units;
  net.num_layers = num_layers;
  net.residual = residual;

  std::vector<std::pair<int, int>> shapes;
  shapes.emplace_back(hidden_units, input_dim);
  for (int i = 1; i < num_layers; ++i)
    shapes.emplace_back(hidden_units, hidden_units);
  shapes.emplace_back(output_dim, hidden_units);

  Rng rng(derive_seed(seed, 0x11));
  for (auto [rows, cols] : shapes) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Mat W(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) W(r, c) = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(W));
    net.biases.push_back(Mat::Zero(rows, 1));
  }
  return net;
}

std::vector<std::pair<std::string, Mat*>> named_params(
    Mlp& net, const std::string& prefix) {
  std::vector<std::pair<std::string, Mat*>> out;
  for (int i = 0; i < net.layer_count(); ++i) {
    out.emplace_back(prefix + ".w" + std::to_string(i), &net.weights[i]);
    out.emplace_back(prefix + ".b" + std::to_string(i), &net.biases[i]);
  }
  return out;
}

SpectralState SpectralState::for_net(const Mlp& net, std::uint64_t seed) {
  SpectralState s;
  Rng rng(derive_seed(seed, 0x5e));
  for (const Mat& W : net.weights) {
    Vec u(W.rows());
    for (int i = 0; i < u.size(); ++i) u(i) = rng.normal();
    const double n = u.norm();
    s.u.push_back(n > 0 ? Vec(u / n) : Vec(Vec::Unit(W.rows(), 0)));
  }
  return s;
}

Mat spectral_normalize(const Mat& W, SpectralState& state, int layer) {
  if (layer < 0 || layer >= static_cast<int>(state.u.size()) ||
      state.u[layer].size() != W.rows())
    throw std::invalid_argument("spectral_normalize: state does not match W");
  PowerStep p = power_iterate(W, state.u[layer]);
  state.u[layer] = p.u;
  if (p.clamped) ++state.degenerate_count;
  return W / p.sigma;
}

StagedMlp stage(ad::Tape& tape, Mlp& net, const std::string& prefix) {
  StagedMlp s;
  s.net = &net;
  for (int i = 0; i < net.layer_count(); ++i) {
    s.forward_weights.push_back(
        tape.parameter(net.weights[i], prefix + ".w" + std::to_string(i)));
    s.biases.push_back(
        tape.parameter(net.biases[i], prefix + ".b" + std::to_string(i)));
  }
  return s;
}

StagedMlp stage_spectral(ad::Tape& tape, Mlp& net, SpectralState& state,
                         const std::string& prefix) {
  StagedMlp s;
  s.net = &net;
  for (int i = 0; i < net.layer_count(); ++i) {
    ad::Var W =
        tape.parameter(net.weights[i], prefix + ".w" + std::to_string(i));
    PowerStep p = power_iterate(net.weights[i], state.u[i]);
    state.u[i] = p.u;
    if (p.clamped) ++state.degenerate_count;
    ad::Var sigma;
    if (p.clamped) {
      sigma = tape.constant(1e-12);
    } else {
      // sigma = u^T W v with u, v constant, so d(W/sigma)/dW is exact
      ad::Var ut = tape.constant(Mat(p.u.transpose()));
      ad::Var v = tape.constant(Mat(p.v));
      sigma = ad::matmul(ad::matmul(ut, W), v);
    }
    s.forward_weights.push_back(ad::div_scalar(W, sigma));
    s.biases.push_back(
        tape.parameter(net.biases[i], prefix + ".b" + std::to_string(i)));
  }
  return s;
}

ad::JetBatch forward(const StagedMlp& staged, const ad::JetBatch& input) {
  const Mlp& net = *staged.net;
  if (input.v.value().rows() != net.input_dim)
    throw std::invalid_argument("forward: input dimension mismatch");
  ad::JetBatch h = input;
  for (int i = 0; i < net.layer_count(); ++i) {
    ad::JetBatch z =
        ad::jet_affine(staged.forward_weights[i], staged.biases[i], h);
    if (i == net.layer_count() - 1) {
      h = z;  // output projection stays affine
    } else if (has_skip(net, i)) {
      h = ad::jet_add(ad::jet_tanh(z), h);
    } else {
      h = ad::jet_tanh(z);
    }
  }
  return h;
}

ad::Var forward_values(const StagedMlp& staged, ad::Var input) {
  const Mlp& net = *staged.net;
  if (input.value().rows() != net.input_dim)
    throw std::invalid_argument("forward_values: input dimension mismatch");
  ad::Var h = input;
  for (int i = 0; i < net.layer_count(); ++i) {
    ad::Var z =
        ad::add_col(ad::matmul(staged.forward_weights[i], h), staged.biases[i]);
    if (i == net.layer_count() - 1) {
      h = z;
    } else if (has_skip(net, i)) {
      h = ad::add(ad::tanh(z), h);
    } else {
      h = ad::tanh(z);
    }
  }
  return h;
}

Mat forward_plain(const Mlp& net, const Mat& X) {
  if (X.rows() != net.input_dim)
    throw std::invalid_argument("forward_plain: input dimension mismatch");
  Mat h = X;
  for (int i = 0; i < net.layer_count(); ++i) {
    Mat z = net.weights[i] * h;
    z.colwise() += Vec(net.biases[i].col(0));
    if (i == net.layer_count() - 1) {
      h = std::move(z);
    } else if (has_skip(net, i)) {
      h = z.array().tanh().matrix() + h;
    } else {
      h = z.array().tanh().matrix();
    }
  }
  return h;
}

}  // namespace deqgan
