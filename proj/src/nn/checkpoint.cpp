#include "pilotstack/nn/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>

namespace pilot::nn {

namespace {

enum class Kind : std::uint32_t { Input = 1, Conv = 2, Dropout = 3, Flatten = 4, Dense = 5, Output = 6 };

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    if (bytes_.size() - pos_ < 4) throw DataError(std::string("checkpoint truncated while reading ") + what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

// Dropout rates are stored as f32; reading back via the shortest decimal
// form restores the double that was written (0.1f -> 0.1, not 0.100000001).
double widen_rate(float r) {
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof buf, r).ptr;
  double out = 0.0;
  std::from_chars(buf, end, out);
  return out;
}

std::uint32_t narrow(std::size_t v) {
  if (v > 0xFFFFFFFFu) throw ValidationError("layer dimension too large for checkpoint");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::size_t checkpoint_header_size(const ArchitectureSpec& arch) { return 12 + 20 * arch.layers.size(); }

std::vector<std::uint8_t> encode_checkpoint(const ModelParams& params) {
  params.arch.validate();
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, narrow(params.arch.layers.size()));
  for (const auto& layer : params.arch.layers) {
    std::uint32_t f[5] = {0, 0, 0, 0, 0};
    if (const auto* l = std::get_if<InputLayer>(&layer)) {
      f[0] = static_cast<std::uint32_t>(Kind::Input);
      f[1] = narrow(l->height), f[2] = narrow(l->width), f[3] = narrow(l->channels);
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      f[0] = static_cast<std::uint32_t>(Kind::Conv);
      f[1] = narrow(c->filters), f[2] = narrow(c->kernel_h), f[3] = narrow(c->kernel_w), f[4] = narrow(c->stride);
    } else if (const auto* d = std::get_if<DropoutLayer>(&layer)) {
      f[0] = static_cast<std::uint32_t>(Kind::Dropout);
      f[1] = std::bit_cast<std::uint32_t>(static_cast<float>(d->rate));
    } else if (std::holds_alternative<FlattenLayer>(layer)) {
      f[0] = static_cast<std::uint32_t>(Kind::Flatten);
    } else if (const auto* e = std::get_if<DenseLayer>(&layer)) {
      f[0] = static_cast<std::uint32_t>(Kind::Dense);
      f[1] = narrow(e->units);
    } else if (const auto* o = std::get_if<OutputLayer>(&layer)) {
      f[0] = static_cast<std::uint32_t>(Kind::Output);
      f[1] = narrow(o->units);
    }
    for (auto v : f) put_u32(out, v);
  }
  const auto shapes = params.arch.parameter_shapes();
  if (shapes.size() != params.tensors.size()) throw ValidationError("parameter tensors do not match architecture");
  out.reserve(out.size() + 4 * params.parameter_count());
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    if (params.tensors[k].shape() != shapes[k]) throw ValidationError("parameter tensor shape mismatch");
    for (const float v : params.tensors[k].values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

ModelParams decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw DataError("not a checkpoint: bad magic (expected \"ACPM\")");
  }
  Reader r(bytes);
  (void)r.u32("magic");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t count = r.u32("layer count");
  if (count == 0 || count > 4096) throw DataError("implausible checkpoint layer count " + std::to_string(count));
  ArchitectureSpec arch;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t f[5];
    for (auto& v : f) v = r.u32("layer descriptor");
    switch (static_cast<Kind>(f[0])) {
      case Kind::Input: arch.layers.emplace_back(InputLayer{f[1], f[2], f[3]}); break;
      case Kind::Conv: arch.layers.emplace_back(ConvLayer{f[1], f[2], f[3], f[4]}); break;
      case Kind::Dropout: arch.layers.emplace_back(DropoutLayer{widen_rate(std::bit_cast<float>(f[1]))}); break;
      case Kind::Flatten: arch.layers.emplace_back(FlattenLayer{}); break;
      case Kind::Dense: arch.layers.emplace_back(DenseLayer{f[1]}); break;
      case Kind::Output: arch.layers.emplace_back(OutputLayer{f[1]}); break;
      default: throw DataError("unknown layer kind " + std::to_string(f[0]) + " in checkpoint");
    }
  }
  try {
    arch.validate();
  } catch (const ValidationError& e) {
    throw DataError(std::string("checkpoint architecture invalid: ") + e.what());
  }
  ModelParams params = ModelParams::zeros(arch);
  const std::size_t expected = 4 * params.parameter_count();
  if (r.remaining() != expected) {
    throw DataError("checkpoint payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                    std::to_string(expected));
  }
  for (auto& t : params.tensors)
    for (auto& v : t.values()) v = std::bit_cast<float>(r.u32("parameters"));
  return params;
}

void save_params(const ModelParams& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

ModelParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace pilot::nn
