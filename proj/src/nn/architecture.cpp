#include "pilotstack/nn/architecture.hpp"

#include <sstream>

namespace pilot::nn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

ArchitectureSpec default_architecture() {
  constexpr double kRate = 0.1;
  return {{
      InputLayer{120, 160, 3},
      ConvLayer{24, 5, 5, 2},
      DropoutLayer{kRate},
      ConvLayer{32, 5, 5, 2},
      DropoutLayer{kRate},
      ConvLayer{64, 5, 5, 2},
      DropoutLayer{kRate},
      ConvLayer{64, 3, 3, 1},
      DropoutLayer{kRate},
      ConvLayer{64, 3, 3, 1},
      DropoutLayer{kRate},
      FlattenLayer{},
      DenseLayer{100},
      DropoutLayer{kRate},
      DenseLayer{50},
      OutputLayer{1},
      OutputLayer{1},
  }};
}

LayerCounts ArchitectureSpec::counts() const {
  LayerCounts c;
  for (const auto& layer : layers) {
    std::visit(Overloaded{[&](const InputLayer&) { ++c.input; }, [&](const ConvLayer&) { ++c.conv; },
                          [&](const DropoutLayer&) { ++c.dropout; }, [&](const FlattenLayer&) { ++c.flatten; },
                          [&](const DenseLayer&) { ++c.dense; }, [&](const OutputLayer&) { ++c.output; }},
               layer);
  }
  return c;
}

const InputLayer& ArchitectureSpec::input() const {
  if (layers.empty() || !std::holds_alternative<InputLayer>(layers.front())) {
    throw ValidationError("architecture must start with an input layer");
  }
  return std::get<InputLayer>(layers.front());
}

void ArchitectureSpec::validate() const {
  (void)shape_chain();
}

std::vector<Shape> ArchitectureSpec::shape_chain() const {
  const InputLayer& in = input();
  if (in.height == 0 || in.width == 0 || in.channels == 0) {
    throw ValidationError("input layer dimensions must be positive");
  }
  enum class Stage { Spatial, Flat, Heads } stage = Stage::Spatial;
  std::vector<Shape> chain{{in.height, in.width, in.channels}};
  Shape current = chain.front();
  std::size_t heads = 0;
  for (std::size_t i = 1; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + describe(layer) + ")";
    std::visit(
        Overloaded{
            [&](const InputLayer&) { throw ValidationError(where + ": only one input layer allowed"); },
            [&](const ConvLayer& c) {
              if (stage != Stage::Spatial) throw ValidationError(where + ": convolution after flatten");
              if (c.filters == 0 || c.kernel_h == 0 || c.kernel_w == 0 || c.stride == 0)
                throw ValidationError(where + ": dimensions must be positive");
              if (c.kernel_h > current[0] || c.kernel_w > current[1])
                throw ValidationError(where + ": kernel larger than input " + shape_string(current));
              current = {(current[0] - c.kernel_h) / c.stride + 1, (current[1] - c.kernel_w) / c.stride + 1,
                         c.filters};
            },
            [&](const DropoutLayer& d) {
              if (stage == Stage::Heads) throw ValidationError(where + ": dropout after output heads");
              if (!(d.rate >= 0.0 && d.rate < 1.0)) throw ValidationError(where + ": rate must be in [0, 1)");
            },
            [&](const FlattenLayer&) {
              if (stage != Stage::Spatial) throw ValidationError(where + ": duplicate flatten");
              stage = Stage::Flat;
              current = {shape_size(current)};
            },
            [&](const DenseLayer& d) {
              if (stage != Stage::Flat) throw ValidationError(where + ": dense layer must follow flatten");
              if (d.units == 0) throw ValidationError(where + ": units must be positive");
              current = {d.units};
            },
            [&](const OutputLayer& o) {
              if (stage == Stage::Spatial) throw ValidationError(where + ": output head before flatten");
              if (o.units != 1) throw ValidationError(where + ": output heads are single-unit");
              stage = Stage::Heads;
              ++heads;
              current = {1};
            }},
        layer);
    chain.push_back(current);
  }
  if (heads != 2) throw ValidationError("architecture needs exactly two output heads (steering, throttle)");
  return chain;
}

std::vector<Shape> ArchitectureSpec::parameter_shapes() const {
  const auto chain = shape_chain();
  std::vector<Shape> shapes;
  Shape trunk;
  for (std::size_t i = 1; i < layers.size(); ++i) {
    const Shape& in = chain[i - 1];
    if (const auto* c = std::get_if<ConvLayer>(&layers[i])) {
      shapes.push_back({c->kernel_h, c->kernel_w, in[2], c->filters});
      shapes.push_back({c->filters});
    } else if (const auto* d = std::get_if<DenseLayer>(&layers[i])) {
      shapes.push_back({in[0], d->units});
      shapes.push_back({d->units});
    } else if (std::holds_alternative<OutputLayer>(layers[i])) {
      if (trunk.empty()) trunk = in;
      shapes.push_back({trunk[0], 1});
      shapes.push_back({1});
    }
  }
  return shapes;
}

std::size_t ArchitectureSpec::parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : parameter_shapes()) n += shape_size(s);
  return n;
}

std::string describe(const LayerSpec& layer) {
  std::ostringstream out;
  std::visit(Overloaded{[&](const InputLayer& l) { out << "Input(" << l.height << "," << l.width << "," << l.channels << ")"; },
                        [&](const ConvLayer& l) {
                          out << "Conv(" << l.filters << "," << l.kernel_h << "x" << l.kernel_w << ",stride " << l.stride << ")+ReLU";
                        },
                        [&](const DropoutLayer& l) { out << "Dropout(" << l.rate << ")"; },
                        [&](const FlattenLayer&) { out << "Flatten"; },
                        [&](const DenseLayer& l) { out << "Dense(" << l.units << ")+ReLU"; },
                        [&](const OutputLayer& l) { out << "OutputDense(" << l.units << ")"; }},
             layer);
  return out.str();
}

}  // namespace pilot::nn
