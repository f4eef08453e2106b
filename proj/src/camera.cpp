#include "pilotstack/camera.hpp"

#include <cmath>

#include "pilotstack/error.hpp"

namespace pilot {

void CameraModel::validate() const {
  if (image_width_px == 0 || image_height_px == 0)
    throw ValidationError("camera image dimensions must be > 0");
  if (!(horizontal_fov_rad > 0.0 && horizontal_fov_rad < std::numbers::pi))
    throw ValidationError("camera.horizontal_fov_rad must be in (0, pi)");
  if (!(mount_height_m > 0.0)) throw ValidationError("camera.mount_height_m must be > 0");
  if (!(pitch_down_rad >= 0.0 && pitch_down_rad < std::numbers::pi / 2.0))
    throw ValidationError("camera.pitch_down_rad must be in [0, pi/2)");
}

CameraFrame::CameraFrame(std::size_t width, std::size_t height)
    : width_(width), height_(height), pixels_(width * height * 3, 0) {}

CameraFrame::CameraFrame(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width_ * height_ * 3) {
    throw ValidationError("camera frame byte length does not match width * height * 3");
  }
}

Rgb CameraFrame::at(std::size_t x, std::size_t y) const {
  const std::size_t i = (y * width_ + x) * 3;
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void CameraFrame::set(std::size_t x, std::size_t y, Rgb c) {
  const std::size_t i = (y * width_ + x) * 3;
  pixels_[i] = c.r;
  pixels_[i + 1] = c.g;
  pixels_[i + 2] = c.b;
}

CameraFrame render_camera_frame(const Track& track, const VehicleState& state,
                                const CameraModel& camera) {
  const std::size_t w = camera.image_width_px;
  const std::size_t h = camera.image_height_px;
  CameraFrame frame(w, h);

  const double focal = (static_cast<double>(w) / 2.0) / std::tan(camera.horizontal_fov_rad / 2.0);
  const double sin_p = std::sin(camera.pitch_down_rad);
  const double cos_p = std::cos(camera.pitch_down_rad);
  const double cos_h = std::cos(state.heading_rad);
  const double sin_h = std::sin(state.heading_rad);
  // Forward axis (cos_h, sin_h); right-hand axis (-sin_h, cos_h).
  const double cam_x = state.x_m + camera.forward_offset_m * cos_h;
  const double cam_y = state.y_m + camera.forward_offset_m * sin_h;
  const Rgb sky = track.spec().colors.sky;

  for (std::size_t v = 0; v < h; ++v) {
    const double up = (static_cast<double>(h) / 2.0 - (static_cast<double>(v) + 0.5)) / focal;
    const double dz = -sin_p + up * cos_p;
    if (dz >= 0.0) {
      for (std::size_t u = 0; u < w; ++u) frame.set(u, v, sky);
      continue;
    }
    const double scale = camera.mount_height_m / -dz;
    const double forward = scale * (cos_p + up * sin_p);
    for (std::size_t u = 0; u < w; ++u) {
      const double right = scale * ((static_cast<double>(u) + 0.5 - static_cast<double>(w) / 2.0) / focal);
      const Vec2 ground{cam_x + forward * cos_h - right * sin_h,
                        cam_y + forward * sin_h + right * cos_h};
      frame.set(u, v, track.surface_color(ground));
    }
  }
  return frame;
}

}  // namespace pilot
