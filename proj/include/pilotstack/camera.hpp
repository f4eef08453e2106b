#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "pilotstack/track.hpp"
#include "pilotstack/vehicle.hpp"

namespace pilot {

/// Pinhole camera rigidly mounted on the car, pitched down toward the road.
struct CameraModel {
  std::size_t image_width_px = 160;
  std::size_t image_height_px = 120;
  double horizontal_fov_rad = std::numbers::pi / 3.0;
  double mount_height_m = 0.12;
  double pitch_down_rad = 15.0 * std::numbers::pi / 180.0;
  double forward_offset_m = 0.10;

  void validate() const;
};

/// Row-major interleaved RGB8 image.
class CameraFrame {
 public:
  CameraFrame() = default;
  CameraFrame(std::size_t width, std::size_t height);
  /// Throws ValidationError unless pixels.size() == width * height * 3.
  CameraFrame(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  Rgb at(std::size_t x, std::size_t y) const;
  void set(std::size_t x, std::size_t y, Rgb c);

  friend bool operator==(const CameraFrame&, const CameraFrame&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Flat-ground ray cast: every pixel either hits the z = 0 plane and takes
/// the surface color there, or is at/above the horizon and gets the sky color.
CameraFrame render_camera_frame(const Track& track, const VehicleState& state,
                                const CameraModel& camera);

}  // namespace pilot
