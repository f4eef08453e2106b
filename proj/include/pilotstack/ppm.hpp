#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "pilotstack/camera.hpp"

namespace pilot {

/// Binary PPM: "P6\n<w> <h>\n255\n" followed by RGB bytes.
std::vector<std::uint8_t> encode_ppm(const CameraFrame& frame);

/// Accepts any P6 header with maxval 255 (comments allowed). Throws DataError
/// mentioning `name` on a malformed header or short payload.
CameraFrame decode_ppm(std::span<const std::uint8_t> bytes, std::string_view name = "<memory>");

void write_ppm(const std::filesystem::path& path, const CameraFrame& frame);
CameraFrame read_ppm(const std::filesystem::path& path);

}  // namespace pilot
