#include "deqgan/optim.hpp"

#include <cmath>

namespace deqgan {

void adam_step(const std::vector<std::pair<std::string, Mat*>>& params,
               const ad::GradientMap& grads, AdamState& state, bool ascend) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step);
  for (const auto& [name, param] : params) {
    auto it = grads.find(name);
    if (it == grads.end())
      throw std::invalid_argument("adam_step: no gradient for " + name);
    if (!it->second.allFinite())
      throw TrainingError("non-finite gradient for " + name, -1, name);
    Mat g = ascend ? Mat(-it->second) : it->second;
    auto& mom = state.moments[name];
    if (mom.m.size() == 0) {
      mom.m = Mat::Zero(g.rows(), g.cols());
      mom.v = Mat::Zero(g.rows(), g.cols());
    }
    mom.m = state.beta1 * mom.m + (1.0 - state.beta1) * g;
    mom.v = state.beta2 * mom.v.array().matrix() +
            (1.0 - state.beta2) * g.cwiseProduct(g);
    const Mat m_hat = mom.m / bc1;
    const Mat v_hat = mom.v / bc2;
    param->array() -=
        state.alpha * m_hat.array() / (v_hat.array().sqrt() + state.eps);
  }
}

void decay_lr(AdamState& state, double gamma) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw ConfigError("decay_lr: gamma must be in (0, 1]");
  state.alpha *= gamma;
}

}  // namespace deqgan
