#pragma once

#include "deqgan/jet.hpp"

namespace deqgan {

/// Feed-forward tanh network. Layout: an input projection to
/// `hidden_units`, then `num_layers - 1` square hidden layers, then an
/// affine output projection (no activation). With `residual` set, every
/// hidden layer whose input and output widths agree adds an identity
/// skip around its activation: y = tanh(W h + b) + h.
struct Mlp {
  int input_dim = 1;
  int output_dim = 1;
  int hidden_units = 0;
  int num_layers = 0;
  bool residual = true;
  std::vector<Mat> weights;
  std::vector<Mat> biases;  // column vectors

  int layer_count() const { return static_cast<int>(weights.size()); }
  bool all_finite() const;
};

/// Xavier-uniform weights, zero biases; a pure function of
/// (seed, architecture) - the same seed gives bit-identical weights.
Mlp make_mlp(int input_dim, int output_dim, int hidden_units, int num_layers,
             bool residual, std::uint64_t seed);

/// Parameter slots in a fixed order: "<prefix>.w<i>", "<prefix>.b<i>"
/// per layer. The same names key tape parameters, gradients and
/// optimizer moments.
std::vector<std::pair<std::string, Mat*>> named_params(Mlp& net,
                                                       const std::string& prefix);

/// Persistent left singular vector estimates for spectral normalization,
/// one unit vector per layer, carried across iterations.
struct SpectralState {
  std::vector<Vec> u;
  long degenerate_count = 0;  // sigma clamp events (zero layers)

  static SpectralState for_net(const Mlp& net, std::uint64_t seed);
};

/// One power-iteration step (v <- W^T u / |W^T u|, u <- W v / |W v|),
/// sigma = u^T W v, returns W / sigma. Updates state.u[layer] in place;
/// sigma is clamped below by 1e-12 for degenerate (zero) layers.
Mat spectral_normalize(const Mat& W, SpectralState& state, int layer);

/// A network staged onto a tape: parameter nodes plus the weight nodes
/// actually used by the forward pass (normalized for the discriminator).
struct StagedMlp {
  const Mlp* net = nullptr;
  std::vector<ad::Var> forward_weights;
  std::vector<ad::Var> biases;
};

StagedMlp stage(ad::Tape& tape, Mlp& net, const std::string& prefix);

/// Stage with spectral normalization: parameters are the raw weights;
/// the forward pass uses W / sigma with sigma = u^T W v built on the
/// tape (u, v held constant), so gradients flow through the division.
StagedMlp stage_spectral(ad::Tape& tape, Mlp& net, SpectralState& state,
                         const std::string& prefix);

/// Forward pass with jets propagated through every layer.
ad::JetBatch forward(const StagedMlp& staged, const ad::JetBatch& input);

/// Value-only forward pass on the tape (discriminator path).
ad::Var forward_values(const StagedMlp& staged, ad::Var input);

/// Tape-free forward pass for evaluation (values only).
Mat forward_plain(const Mlp& net, const Mat& X);

}  // namespace deqgan
