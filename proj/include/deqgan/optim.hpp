#pragma once

#include "deqgan/autodiff.hpp"
#include "deqgan/net.hpp"

namespace deqgan {

/// Adam with bias correction. `alpha` is the live learning rate and is
/// what decay_lr shrinks; moments are keyed by parameter name.
struct AdamState {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;

  struct Moments {
    Mat m, v;
  };
  std::map<std::string, Moments> moments;
};

/// One Adam update over every (name, parameter) slot. `ascend` negates
/// the gradient direction before the moment updates, so ascent on L is
/// parameter-for-parameter identical to descent on -L. Throws
/// TrainingError on non-finite gradients, naming the parameter.
void adam_step(const std::vector<std::pair<std::string, Mat*>>& params,
               const ad::GradientMap& grads, AdamState& state, bool ascend);

/// alpha <- alpha * gamma, applied once per training iteration.
/// gamma outside (0, 1] is a config error.
void decay_lr(AdamState& state, double gamma);

}  // namespace deqgan
