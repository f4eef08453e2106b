#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pilotstack/nn/tensor.hpp"
#include "pilotstack/rng.hpp"

namespace pilot::nn {

enum class Mode { Train, Infer };

/// Geometry of a valid-padding, cross-correlation convolution on an HWC image.
struct ConvGeometry {
  std::size_t in_h = 0, in_w = 0, in_c = 0;
  std::size_t kernel_h = 0, kernel_w = 0, filters = 0;
  std::size_t stride = 1;

  std::size_t out_h() const { return (in_h - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (in_w - kernel_w) / stride + 1; }
  std::size_t patch_count() const { return out_h() * out_w(); }
  std::size_t patch_size() const { return kernel_h * kernel_w * in_c; }
  void validate() const;
};

// Raw single-sample kernels used by the model. `patches` is a caller-owned
// workspace of patch_count() x patch_size() elements.
template <typename T>
void im2col(const T* input, const ConvGeometry& g, T* patches);
template <typename T>
void col2im_add(const T* patches, const ConvGeometry& g, T* grad_input);
template <typename T>
void conv2d_forward_raw(const T* input, const T* kernel, const T* bias, const ConvGeometry& g,
                        T* output, std::vector<T>& workspace);
/// Accumulates into grad_kernel / grad_bias; overwrites grad_input when non-null.
template <typename T>
void conv2d_backward_raw(const T* grad_out, const T* input, const T* kernel, const ConvGeometry& g,
                         T* grad_input, T* grad_kernel, T* grad_bias, std::vector<T>& workspace);

/// input (h, w, c), kernel (kh, kw, c, f), bias (f) -> (h', w', f).
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                              const BasicTensor<T>& bias, std::size_t stride);

template <typename T>
struct ConvGradients {
  BasicTensor<T> input;
  BasicTensor<T> kernel;
  BasicTensor<T> bias;
};

template <typename T>
ConvGradients<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                 const BasicTensor<T>& kernel, std::size_t stride);

/// input (b, in), weight (in, out), bias (out) -> (b, out).
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                             const BasicTensor<T>& bias);

template <typename T>
struct DenseGradients {
  BasicTensor<T> input;
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

template <typename T>
DenseGradients<T> dense_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                 const BasicTensor<T>& weight);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input);
/// Passes gradient only where input > 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input);

/// (b, d1, d2, ...) -> (b, d1 * d2 * ...).
template <typename T>
BasicTensor<T> flatten_forward(const BasicTensor<T>& input);
template <typename T>
BasicTensor<T> flatten_backward(const BasicTensor<T>& grad_out, const Shape& input_shape);

template <typename T>
struct DropoutResult {
  BasicTensor<T> output;
  std::vector<std::uint8_t> mask;  // 1 = kept
  T scale = T{1};
};

/// Inverted dropout. Infer mode is the identity and leaves `rng` untouched.
/// Throws ValidationError unless 0 <= rate < 1.
template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& input, double rate, Mode mode, Rng& rng);
template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_out, const std::vector<std::uint8_t>& mask,
                                T scale);

template <typename T>
struct DualHeadLoss {
  double loss = 0.0;
  BasicTensor<T> grad_steering;
  BasicTensor<T> grad_throttle;
};

/// 0.5 * [mean((ps - ts)^2) + mean((pt - tt)^2)] with analytic gradients.
template <typename T>
DualHeadLoss<T> mse_dual_head_loss(const BasicTensor<T>& pred_steering, const BasicTensor<T>& pred_throttle,
                                   const BasicTensor<T>& target_steering,
                                   const BasicTensor<T>& target_throttle);

}  // namespace pilot::nn
