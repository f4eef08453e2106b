#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "pilotstack/nn/tensor.hpp"

namespace pilot::nn {

struct InputLayer {
  std::size_t height = 0, width = 0, channels = 0;
  friend bool operator==(const InputLayer&, const InputLayer&) = default;
};
/// Valid-padding convolution followed by ReLU.
struct ConvLayer {
  std::size_t filters = 0, kernel_h = 0, kernel_w = 0, stride = 1;
  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};
struct DropoutLayer {
  double rate = 0.0;
  friend bool operator==(const DropoutLayer&, const DropoutLayer&) = default;
};
struct FlattenLayer {
  friend bool operator==(const FlattenLayer&, const FlattenLayer&) = default;
};
/// Fully connected layer followed by ReLU.
struct DenseLayer {
  std::size_t units = 0;
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};
/// Linear output head; every head reads the last trunk activation.
struct OutputLayer {
  std::size_t units = 1;
  friend bool operator==(const OutputLayer&, const OutputLayer&) = default;
};

using LayerSpec = std::variant<InputLayer, ConvLayer, DropoutLayer, FlattenLayer, DenseLayer, OutputLayer>;

struct LayerCounts {
  std::size_t input = 0, conv = 0, dropout = 0, flatten = 0, dense = 0, output = 0;
};

/// Ordered layer list: Input, then conv/dropout stages, Flatten, dense/dropout
/// stages, and finally exactly two single-unit output heads (steering, throttle).
struct ArchitectureSpec {
  std::vector<LayerSpec> layers;

  /// Throws ValidationError when the layer order or any dimension is invalid.
  void validate() const;
  LayerCounts counts() const;
  /// Per-layer output shape without the batch axis. Heads report (1).
  std::vector<Shape> shape_chain() const;
  /// Weight and bias shapes for each parametric layer, in layer order.
  std::vector<Shape> parameter_shapes() const;
  std::size_t parameter_count() const;
  const InputLayer& input() const;

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

/// The five-conv / two-dense network with six dropout layers and two heads,
/// for 120 x 160 x 3 images.
ArchitectureSpec default_architecture();

std::string describe(const LayerSpec& layer);

}  // namespace pilot::nn
