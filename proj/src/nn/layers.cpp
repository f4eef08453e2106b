#include "pilotstack/nn/layers.hpp"

#include <algorithm>
#include <cstring>

#include "pilotstack/nn/gemm.hpp"

namespace pilot::nn {

void ConvGeometry::validate() const {
  if (in_h == 0 || in_w == 0 || in_c == 0 || kernel_h == 0 || kernel_w == 0 || filters == 0 ||
      stride == 0) {
    throw ValidationError("convolution dimensions must be positive");
  }
  if (kernel_h > in_h || kernel_w > in_w) {
    throw ValidationError("convolution kernel larger than its input");
  }
}

template <typename T>
void im2col(const T* input, const ConvGeometry& g, T* patches) {
  const std::size_t out_h = g.out_h();
  const std::size_t out_w = g.out_w();
  const std::size_t run = g.kernel_w * g.in_c;
  const std::size_t k = g.patch_size();
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      T* dst = patches + (oy * out_w + ox) * k;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const T* src = input + ((oy * g.stride + ky) * g.in_w + ox * g.stride) * g.in_c;
        std::copy(src, src + run, dst + ky * run);
      }
    }
  }
}

template <typename T>
void col2im_add(const T* patches, const ConvGeometry& g, T* grad_input) {
  const std::size_t out_h = g.out_h();
  const std::size_t out_w = g.out_w();
  const std::size_t run = g.kernel_w * g.in_c;
  const std::size_t k = g.patch_size();
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const T* src = patches + (oy * out_w + ox) * k;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        T* dst = grad_input + ((oy * g.stride + ky) * g.in_w + ox * g.stride) * g.in_c;
        const T* row = src + ky * run;
        for (std::size_t i = 0; i < run; ++i) dst[i] += row[i];
      }
    }
  }
}

template <typename T>
void conv2d_forward_raw(const T* input, const T* kernel, const T* bias, const ConvGeometry& g,
                        T* output, std::vector<T>& workspace) {
  const std::size_t p = g.patch_count();
  const std::size_t k = g.patch_size();
  const std::size_t f = g.filters;
  workspace.resize(p * k);
  im2col(input, g, workspace.data());
  gemm<T>(p, f, k, row_major<const T>(workspace.data(), k), row_major(kernel, f), row_major(output, f),
          false);
  for (std::size_t r = 0; r < p; ++r) {
    T* row = output + r * f;
    for (std::size_t j = 0; j < f; ++j) row[j] += bias[j];
  }
}

template <typename T>
void conv2d_backward_raw(const T* grad_out, const T* input, const T* kernel, const ConvGeometry& g,
                         T* grad_input, T* grad_kernel, T* grad_bias, std::vector<T>& workspace) {
  const std::size_t p = g.patch_count();
  const std::size_t k = g.patch_size();
  const std::size_t f = g.filters;
  for (std::size_t r = 0; r < p; ++r) {
    const T* row = grad_out + r * f;
    for (std::size_t j = 0; j < f; ++j) grad_bias[j] += row[j];
  }
  workspace.resize(p * k);
  im2col(input, g, workspace.data());
  gemm<T>(k, f, p, transposed(row_major<const T>(workspace.data(), k)), row_major(grad_out, f),
          row_major(grad_kernel, f), true);
  if (grad_input != nullptr) {
    gemm<T>(p, k, f, row_major(grad_out, f), transposed(row_major(kernel, f)),
            row_major(workspace.data(), k), false);
    std::fill(grad_input, grad_input + g.in_h * g.in_w * g.in_c, T{0});
    col2im_add(workspace.data(), g, grad_input);
  }
}

namespace {

template <typename T>
ConvGeometry conv_geometry(const BasicTensor<T>& input, const BasicTensor<T>& kernel, std::size_t stride) {
  if (input.rank() != 3 || kernel.rank() != 4) {
    throw ValidationError("conv2d expects input (h,w,c) and kernel (kh,kw,c,f), got " +
                          shape_string(input.shape()) + " and " + shape_string(kernel.shape()));
  }
  if (kernel.dim(2) != input.dim(2)) {
    throw ValidationError("conv2d channel mismatch: input " + shape_string(input.shape()) +
                          ", kernel " + shape_string(kernel.shape()));
  }
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), kernel.dim(0), kernel.dim(1), kernel.dim(3),
                 stride};
  g.validate();
  return g;
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                              const BasicTensor<T>& bias, std::size_t stride) {
  const ConvGeometry g = conv_geometry(input, kernel, stride);
  if (bias.size() != g.filters) throw ValidationError("conv2d bias length must equal filter count");
  BasicTensor<T> out({g.out_h(), g.out_w(), g.filters});
  std::vector<T> workspace;
  conv2d_forward_raw(input.data(), kernel.data(), bias.data(), g, out.data(), workspace);
  return out;
}

template <typename T>
ConvGradients<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                 const BasicTensor<T>& kernel, std::size_t stride) {
  const ConvGeometry g = conv_geometry(input, kernel, stride);
  if (grad_out.shape() != Shape{g.out_h(), g.out_w(), g.filters}) {
    throw ValidationError("conv2d_backward grad_out shape " + shape_string(grad_out.shape()) +
                          " does not match forward output");
  }
  ConvGradients<T> grads{BasicTensor<T>(input.shape()), BasicTensor<T>(kernel.shape()),
                         BasicTensor<T>({g.filters})};
  std::vector<T> workspace;
  conv2d_backward_raw(grad_out.data(), input.data(), kernel.data(), g, grads.input.data(),
                      grads.kernel.data(), grads.bias.data(), workspace);
  return grads;
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                             const BasicTensor<T>& bias) {
  if (input.rank() != 2 || weight.rank() != 2 || input.dim(1) != weight.dim(0) ||
      bias.size() != weight.dim(1)) {
    throw ValidationError("dense shape mismatch: input " + shape_string(input.shape()) + ", weight " +
                          shape_string(weight.shape()) + ", bias " + shape_string(bias.shape()));
  }
  const std::size_t b = input.dim(0);
  const std::size_t in = weight.dim(0);
  const std::size_t out = weight.dim(1);
  BasicTensor<T> y({b, out});
  gemm<T>(b, out, in, row_major(input.data(), in), row_major(weight.data(), out), row_major(y.data(), out),
          false);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < out; ++j) y[i * out + j] += bias[j];
  return y;
}

template <typename T>
DenseGradients<T> dense_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                 const BasicTensor<T>& weight) {
  if (input.rank() != 2 || weight.rank() != 2 || input.dim(1) != weight.dim(0) ||
      grad_out.shape() != Shape{input.dim(0), weight.dim(1)}) {
    throw ValidationError("dense_backward shape mismatch");
  }
  const std::size_t b = input.dim(0);
  const std::size_t in = weight.dim(0);
  const std::size_t out = weight.dim(1);
  DenseGradients<T> g{BasicTensor<T>(input.shape()), BasicTensor<T>(weight.shape()), BasicTensor<T>({out})};
  gemm<T>(in, out, b, transposed(row_major(input.data(), in)), row_major(grad_out.data(), out),
          row_major(g.weight.data(), out), false);
  gemm<T>(b, in, out, row_major(grad_out.data(), out), transposed(row_major(weight.data(), out)),
          row_major(g.input.data(), in), false);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < out; ++j) g.bias[j] += grad_out[i * out + j];
  return g;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
  BasicTensor<T> out = input;
  for (auto& v : out.values()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input) {
  if (grad_out.shape() != input.shape()) throw ValidationError("relu_backward shape mismatch");
  BasicTensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(input[i] > T{0})) g[i] = T{0};
  return g;
}

template <typename T>
BasicTensor<T> flatten_forward(const BasicTensor<T>& input) {
  if (input.rank() < 1) throw ValidationError("flatten needs a batch axis");
  BasicTensor<T> out = input;
  const std::size_t b = input.dim(0);
  out.reshape({b, b == 0 ? 0 : input.size() / b});
  return out;
}

template <typename T>
BasicTensor<T> flatten_backward(const BasicTensor<T>& grad_out, const Shape& input_shape) {
  BasicTensor<T> g = grad_out;
  g.reshape(input_shape);
  return g;
}

template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& input, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("dropout rate must be in [0, 1)");
  DropoutResult<T> r{input, std::vector<std::uint8_t>(input.size(), 1), T{1}};
  if (mode == Mode::Infer) return r;
  r.scale = static_cast<T>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < input.size(); ++i) {
    const bool keep = rng.uniform() >= rate;
    r.mask[i] = keep ? 1 : 0;
    r.output[i] = keep ? input[i] * r.scale : T{0};
  }
  return r;
}

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_out, const std::vector<std::uint8_t>& mask,
                                T scale) {
  if (mask.size() != grad_out.size()) throw ValidationError("dropout mask size mismatch");
  BasicTensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = mask[i] ? g[i] * scale : T{0};
  return g;
}

template <typename T>
DualHeadLoss<T> mse_dual_head_loss(const BasicTensor<T>& pred_steering, const BasicTensor<T>& pred_throttle,
                                   const BasicTensor<T>& target_steering,
                                   const BasicTensor<T>& target_throttle) {
  const std::size_t n = pred_steering.size();
  if (n == 0 || pred_throttle.size() != n || target_steering.size() != n || target_throttle.size() != n) {
    throw ValidationError("dual-head loss needs equal, non-empty batch sizes");
  }
  DualHeadLoss<T> r{0.0, BasicTensor<T>(pred_steering.shape()), BasicTensor<T>(pred_throttle.shape())};
  double sum_s = 0.0;
  double sum_t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ds = static_cast<double>(pred_steering[i]) - static_cast<double>(target_steering[i]);
    const double dt = static_cast<double>(pred_throttle[i]) - static_cast<double>(target_throttle[i]);
    sum_s += ds * ds;
    sum_t += dt * dt;
    r.grad_steering[i] = static_cast<T>(ds / static_cast<double>(n));
    r.grad_throttle[i] = static_cast<T>(dt / static_cast<double>(n));
  }
  r.loss = 0.5 * (sum_s + sum_t) / static_cast<double>(n);
  return r;
}

#define PILOT_INSTANTIATE_LAYERS(T)                                                                     \
  template void im2col<T>(const T*, const ConvGeometry&, T*);                                           \
  template void col2im_add<T>(const T*, const ConvGeometry&, T*);                                       \
  template void conv2d_forward_raw<T>(const T*, const T*, const T*, const ConvGeometry&, T*,            \
                                      std::vector<T>&);                                                 \
  template void conv2d_backward_raw<T>(const T*, const T*, const T*, const ConvGeometry&, T*, T*, T*,  \
                                       std::vector<T>&);                                                \
  template BasicTensor<T> conv2d_forward<T>(const BasicTensor<T>&, const BasicTensor<T>&,              \
                                            const BasicTensor<T>&, std::size_t);                        \
  template ConvGradients<T> conv2d_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                               const BasicTensor<T>&, std::size_t);                     \
  template BasicTensor<T> dense_forward<T>(const BasicTensor<T>&, const BasicTensor<T>&,               \
                                           const BasicTensor<T>&);                                      \
  template DenseGradients<T> dense_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                               const BasicTensor<T>&);                                  \
  template BasicTensor<T> relu_forward<T>(const BasicTensor<T>&);                                      \
  template BasicTensor<T> relu_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template BasicTensor<T> flatten_forward<T>(const BasicTensor<T>&);                                   \
  template BasicTensor<T> flatten_backward<T>(const BasicTensor<T>&, const Shape&);                    \
  template DropoutResult<T> dropout_forward<T>(const BasicTensor<T>&, double, Mode, Rng&);             \
  template BasicTensor<T> dropout_backward<T>(const BasicTensor<T>&, const std::vector<std::uint8_t>&, \
                                              T);                                                       \
  template DualHeadLoss<T> mse_dual_head_loss<T>(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                                 const BasicTensor<T>&, const BasicTensor<T>&);

PILOT_INSTANTIATE_LAYERS(float)
PILOT_INSTANTIATE_LAYERS(double)

#undef PILOT_INSTANTIATE_LAYERS

}  // namespace pilot::nn
