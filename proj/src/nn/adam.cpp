#include "pilotstack/nn/adam.hpp"

#include <cmath>

namespace pilot::nn {

AdamState AdamState::for_params(const ModelParams& params) {
  AdamState s;
  for (const auto& t : params.tensors) {
    s.first_moment.emplace_back(t.shape());
    s.second_moment.emplace_back(t.shape());
  }
  return s;
}

void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state, const AdamConfig& config) {
  if (grads.size() != params.tensors.size() || state.first_moment.size() != params.tensors.size()) {
    throw ValidationError("adam_step: gradient / state count does not match parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  const auto b1 = static_cast<float>(config.beta1);
  const auto b2 = static_cast<float>(config.beta2);
  for (std::size_t k = 0; k < params.tensors.size(); ++k) {
    Tensor& p = params.tensors[k];
    const Tensor& g = grads[k];
    if (g.shape() != p.shape()) throw ValidationError("adam_step: gradient shape mismatch");
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      const double m_hat = static_cast<double>(m[i]) / correction1;
      const double v_hat = static_cast<double>(v[i]) / correction2;
      p[i] = static_cast<float>(static_cast<double>(p[i]) -
                                config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon));
    }
  }
}

}  // namespace pilot::nn
