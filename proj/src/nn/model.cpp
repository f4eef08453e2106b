#include "pilotstack/nn/model.hpp"

#include <cmath>
#include <sstream>

#include "pilotstack/nn/gemm.hpp"

namespace pilot::nn {

namespace {

Shape with_batch(std::size_t batch, const Shape& shape) {
  Shape s{batch};
  s.insert(s.end(), shape.begin(), shape.end());
  return s;
}

// Index of the first parameter tensor (weight) for each layer, or -1.
std::vector<long> parameter_slots(const ArchitectureSpec& arch) {
  std::vector<long> slots(arch.layers.size(), -1);
  long next = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& l = arch.layers[i];
    if (std::holds_alternative<ConvLayer>(l) || std::holds_alternative<DenseLayer>(l) ||
        std::holds_alternative<OutputLayer>(l)) {
      slots[i] = next;
      next += 2;
    }
  }
  return slots;
}

std::size_t first_head(const ArchitectureSpec& arch) {
  for (std::size_t i = 0; i < arch.layers.size(); ++i)
    if (std::holds_alternative<OutputLayer>(arch.layers[i])) return i;
  throw ValidationError("architecture has no output head");
}

template <typename T>
void relu_inplace(T* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) data[i] = data[i] > T{0} ? data[i] : T{0};
}

template <typename T>
void relu_mask_inplace(T* grad, const T* activation, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(activation[i] > T{0})) grad[i] = T{0};
}

}  // namespace

template <typename T>
BasicModelParams<T> BasicModelParams<T>::zeros(const ArchitectureSpec& arch) {
  BasicModelParams<T> p{arch, {}};
  for (auto& s : arch.parameter_shapes()) p.tensors.emplace_back(s);
  return p;
}

template <typename T>
std::size_t BasicModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

ModelParams initialize_params(const ArchitectureSpec& arch, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(arch);
  const auto slots = parameter_slots(arch);
  Rng rng(derive_seed(seed, 0x1A17));
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (slots[i] < 0) continue;
    Tensor& w = p.tensors[static_cast<std::size_t>(slots[i])];
    const std::size_t fan_out = w.shape().back();
    const std::size_t fan_in = w.size() / fan_out;
    const bool head = std::holds_alternative<OutputLayer>(arch.layers[i]);
    const double limit = head ? std::sqrt(6.0 / static_cast<double>(fan_in + fan_out))
                              : std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : w.values()) v = static_cast<float>(rng.uniform(-limit, limit));
  }
  return p;
}

template <typename T>
ForwardResult<T> model_forward(const BasicModelParams<T>& params, const BasicTensor<T>& batch, Mode mode,
                               Rng* rng) {
  const ArchitectureSpec& arch = params.arch;
  const auto chain = arch.shape_chain();
  const auto slots = parameter_slots(arch);
  if (batch.rank() != 4 || batch.dim(0) == 0 || Shape(batch.shape().begin() + 1, batch.shape().end()) != chain[0]) {
    throw ValidationError("model input must be (b," + shape_string(chain[0]).substr(1) + ", got " +
                          shape_string(batch.shape()));
  }
  for (const T v : batch.values()) {
    if (!(v <= T(1.5))) {
      throw ValidationError("model input contains values above 1.5; images must be scaled to [0, 1]");
    }
  }
  if (mode == Mode::Train && rng == nullptr) throw ValidationError("train-mode forward needs an rng");

  const std::size_t b = batch.dim(0);
  const std::size_t heads_at = first_head(arch);
  ForwardResult<T> result;
  ForwardCache<T>& cache = result.cache;
  cache.mode = mode;
  cache.activations.reserve(heads_at);
  cache.activations.push_back(batch);
  cache.masks.resize(arch.layers.size());
  cache.scales.assign(arch.layers.size(), T{1});

  std::vector<T> workspace;
  for (std::size_t i = 1; i < heads_at; ++i) {
    const BasicTensor<T>& in = cache.activations.back();
    const auto& layer = arch.layers[i];
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      const Shape& ins = chain[i - 1];
      const ConvGeometry g{ins[0], ins[1], ins[2], conv->kernel_h, conv->kernel_w, conv->filters, conv->stride};
      BasicTensor<T> out(with_batch(b, chain[i]));
      const std::size_t in_n = shape_size(ins);
      const std::size_t out_n = shape_size(chain[i]);
      const auto& w = params.tensors[static_cast<std::size_t>(slots[i])];
      const auto& bias = params.tensors[static_cast<std::size_t>(slots[i]) + 1];
      for (std::size_t s = 0; s < b; ++s) {
        conv2d_forward_raw(in.data() + s * in_n, w.data(), bias.data(), g, out.data() + s * out_n, workspace);
        relu_inplace(out.data() + s * out_n, out_n);
      }
      cache.activations.push_back(std::move(out));
    } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      const auto& w = params.tensors[static_cast<std::size_t>(slots[i])];
      const auto& bias = params.tensors[static_cast<std::size_t>(slots[i]) + 1];
      BasicTensor<T> out = dense_forward(in, w, bias);
      relu_inplace(out.data(), out.size());
      (void)dense;
      cache.activations.push_back(std::move(out));
    } else if (const auto* drop = std::get_if<DropoutLayer>(&layer)) {
      if (mode == Mode::Train) {
        auto r = dropout_forward(in, drop->rate, mode, *rng);
        cache.masks[i] = std::move(r.mask);
        cache.scales[i] = r.scale;
        cache.activations.push_back(std::move(r.output));
      } else {
        cache.activations.push_back(in);
      }
    } else if (std::holds_alternative<FlattenLayer>(layer)) {
      cache.activations.push_back(flatten_forward(in));
    } else {
      throw ValidationError("unexpected layer before output heads: " + describe(layer));
    }
  }

  const BasicTensor<T>& hidden = cache.activations.back();
  BasicTensor<T>* outputs[2] = {&result.steering, &result.throttle};
  for (std::size_t h = 0; h < 2; ++h) {
    const std::size_t slot = static_cast<std::size_t>(slots[heads_at + h]);
    *outputs[h] = dense_forward(hidden, params.tensors[slot], params.tensors[slot + 1]);
  }
  return result;
}

template <typename T>
std::vector<BasicTensor<T>> model_backward(const BasicModelParams<T>& params, const ForwardCache<T>& cache,
                                           const BasicTensor<T>& grad_steering,
                                           const BasicTensor<T>& grad_throttle) {
  const ArchitectureSpec& arch = params.arch;
  const auto chain = arch.shape_chain();
  const auto slots = parameter_slots(arch);
  const std::size_t heads_at = first_head(arch);
  if (cache.activations.size() != heads_at) throw ValidationError("forward cache does not match architecture");
  const std::size_t b = cache.activations.front().dim(0);
  if (grad_steering.shape() != Shape{b, 1} || grad_throttle.shape() != Shape{b, 1}) {
    throw ValidationError("head gradients must be (b, 1)");
  }

  std::vector<BasicTensor<T>> grads;
  for (const auto& t : params.tensors) grads.emplace_back(t.shape());

  const BasicTensor<T>& hidden = cache.activations.back();
  BasicTensor<T> g(hidden.shape());
  const BasicTensor<T>* head_grads[2] = {&grad_steering, &grad_throttle};
  for (std::size_t h = 0; h < 2; ++h) {
    const std::size_t slot = static_cast<std::size_t>(slots[heads_at + h]);
    DenseGradients<T> dg = dense_backward(*head_grads[h], hidden, params.tensors[slot]);
    grads[slot] = std::move(dg.weight);
    grads[slot + 1] = std::move(dg.bias);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += dg.input[k];
  }

  std::vector<T> workspace;
  for (std::size_t i = heads_at - 1; i >= 1; --i) {
    const auto& layer = arch.layers[i];
    const BasicTensor<T>& in = cache.activations[i - 1];
    const BasicTensor<T>& out = cache.activations[i];
    const bool need_input_grad = i > 1;
    if (std::holds_alternative<ConvLayer>(layer)) {
      const auto& conv = std::get<ConvLayer>(layer);
      const Shape& ins = chain[i - 1];
      const ConvGeometry geo{ins[0], ins[1], ins[2], conv.kernel_h, conv.kernel_w, conv.filters, conv.stride};
      relu_mask_inplace(g.data(), out.data(), g.size());
      const std::size_t slot = static_cast<std::size_t>(slots[i]);
      const std::size_t in_n = shape_size(ins);
      const std::size_t out_n = shape_size(chain[i]);
      BasicTensor<T> g_in(need_input_grad ? in.shape() : Shape{});
      for (std::size_t s = 0; s < b; ++s) {
        conv2d_backward_raw(g.data() + s * out_n, in.data() + s * in_n, params.tensors[slot].data(), geo,
                            need_input_grad ? g_in.data() + s * in_n : nullptr, grads[slot].data(),
                            grads[slot + 1].data(), workspace);
      }
      g = std::move(g_in);
    } else if (std::holds_alternative<DenseLayer>(layer)) {
      relu_mask_inplace(g.data(), out.data(), g.size());
      const std::size_t slot = static_cast<std::size_t>(slots[i]);
      DenseGradients<T> dg = dense_backward(g, in, params.tensors[slot]);
      grads[slot] = std::move(dg.weight);
      grads[slot + 1] = std::move(dg.bias);
      g = std::move(dg.input);
    } else if (std::holds_alternative<DropoutLayer>(layer)) {
      if (cache.mode == Mode::Train) g = dropout_backward(g, cache.masks[i], cache.scales[i]);
    } else if (std::holds_alternative<FlattenLayer>(layer)) {
      g = flatten_backward(g, in.shape());
    }
    if (i == 1) break;
  }
  return grads;
}

template struct BasicModelParams<float>;
template struct BasicModelParams<double>;
template ForwardResult<float> model_forward<float>(const BasicModelParams<float>&, const BasicTensor<float>&, Mode,
                                                   Rng*);
template ForwardResult<double> model_forward<double>(const BasicModelParams<double>&, const BasicTensor<double>&,
                                                     Mode, Rng*);
template std::vector<BasicTensor<float>> model_backward<float>(const BasicModelParams<float>&,
                                                               const ForwardCache<float>&,
                                                               const BasicTensor<float>&, const BasicTensor<float>&);
template std::vector<BasicTensor<double>> model_backward<double>(const BasicModelParams<double>&,
                                                                 const ForwardCache<double>&,
                                                                 const BasicTensor<double>&,
                                                                 const BasicTensor<double>&);

}  // namespace pilot::nn
