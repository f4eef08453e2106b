#pragma once

#include <cstdint>
#include <vector>

#include "pilotstack/nn/architecture.hpp"
#include "pilotstack/nn/layers.hpp"
#include "pilotstack/nn/tensor.hpp"
#include "pilotstack/rng.hpp"

namespace pilot::nn {

/// All learnable tensors of a network: (weight, bias) per conv, dense and
/// output layer, in layer order.
template <typename T>
struct BasicModelParams {
  ArchitectureSpec arch;
  std::vector<BasicTensor<T>> tensors;

  /// Zero-filled parameters for `arch` (validated).
  static BasicModelParams zeros(const ArchitectureSpec& arch);

  std::size_t parameter_count() const;

  template <typename U>
  BasicModelParams<U> cast() const {
    BasicModelParams<U> out{arch, {}};
    out.tensors.reserve(tensors.size());
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<U>());
    return out;
  }

  friend bool operator==(const BasicModelParams&, const BasicModelParams&) = default;
};

using ModelParams = BasicModelParams<float>;

/// He-uniform weights for layers feeding a ReLU, Glorot-uniform for the linear
/// heads, zero biases. Fully determined by `seed`.
ModelParams initialize_params(const ArchitectureSpec& arch, std::uint64_t seed);

template <typename T>
struct ForwardCache {
  Mode mode = Mode::Infer;
  std::vector<BasicTensor<T>> activations;          // [0] is the input batch
  std::vector<std::vector<std::uint8_t>> masks;     // per layer; only dropout layers in train mode
  std::vector<T> scales;
};

template <typename T>
struct ForwardResult {
  BasicTensor<T> steering;  // (b, 1)
  BasicTensor<T> throttle;  // (b, 1)
  ForwardCache<T> cache;
};

/// Batch (b, h, w, c) of preprocessed values in [0, 1]. Rejects inputs above
/// 1.5 as not preprocessed. Train mode requires `rng` for dropout masks.
template <typename T>
ForwardResult<T> model_forward(const BasicModelParams<T>& params, const BasicTensor<T>& batch, Mode mode,
                               Rng* rng = nullptr);

/// Gradients of the loss w.r.t. every parameter tensor, given the gradients
/// w.r.t. the two head outputs.
template <typename T>
std::vector<BasicTensor<T>> model_backward(const BasicModelParams<T>& params, const ForwardCache<T>& cache,
                                           const BasicTensor<T>& grad_steering,
                                           const BasicTensor<T>& grad_throttle);

}  // namespace pilot::nn
