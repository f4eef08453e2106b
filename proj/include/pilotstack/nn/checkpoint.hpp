#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pilotstack/nn/model.hpp"

namespace pilot::nn {

inline constexpr char kCheckpointMagic[4] = {'A', 'C', 'P', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout (all little-endian):
///   "ACPM" | u32 version | u32 layer count |
///   per layer: u32 kind, u32 f0, u32 f1, u32 f2, u32 f3 |
///   f32 parameters, layer by layer (weight then bias) in architecture order.
std::vector<std::uint8_t> encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Size in bytes of everything before the parameter payload.
std::size_t checkpoint_header_size(const ArchitectureSpec& arch);

void save_params(const ModelParams& params, const std::filesystem::path& path);
/// Throws DataError on bad magic, version, descriptor or size.
ModelParams load_params(const std::filesystem::path& path);

}  // namespace pilot::nn
