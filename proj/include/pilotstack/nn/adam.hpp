#pragma once

#include <cstdint>
#include <vector>

#include "pilotstack/nn/model.hpp"

namespace pilot::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;

  static AdamState for_params(const ModelParams& params);
};

/// One bias-corrected Adam update, in place. Deterministic.
void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state, const AdamConfig& config);

}  // namespace pilot::nn
