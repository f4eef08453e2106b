#include "pilotstack/ppm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "pilotstack/error.hpp"

namespace pilot {

std::vector<std::uint8_t> encode_ppm(const CameraFrame& frame) {
  const std::string header =
      "P6\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), frame.pixels().begin(), frame.pixels().end());
  return out;
}

CameraFrame decode_ppm(std::span<const std::uint8_t> bytes, std::string_view name) {
  const std::string where(name);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw DataError("bad PPM magic in " + where + " (expected P6)");
  }
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* field) {
    skip_space();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (++digits > 9) throw DataError("PPM " + std::string(field) + " too large in " + where);
      ++pos;
    }
    if (digits == 0) throw DataError("malformed PPM header in " + where + " (missing " + field + ")");
    return value;
  };
  const std::size_t width = number("width");
  const std::size_t height = number("height");
  const std::size_t maxval = number("maxval");
  if (maxval != 255) throw DataError("unsupported PPM maxval " + std::to_string(maxval) + " in " + where);
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw DataError("malformed PPM header in " + where);
  }
  ++pos;
  const std::size_t expected = width * height * 3;
  if (width == 0 || height == 0 || bytes.size() - pos != expected) {
    throw DataError("PPM payload size mismatch in " + where);
  }
  return CameraFrame(width, height, std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end()));
}

void write_ppm(const std::filesystem::path& path, const CameraFrame& frame) {
  const auto bytes = encode_ppm(frame);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing image " + path.string());
}

CameraFrame read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ppm(bytes, path.filename().string());
}

}  // namespace pilot
