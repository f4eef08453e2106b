#include <gtest/gtest.h>

#include <cmath>

#include "pilotstack/camera.hpp"
#include "pilotstack/error.hpp"

using namespace pilot;

namespace {

// A square so large that, seen from the middle of one edge, the other
// edges are far beyond the horizon rows that hit the ground nearby.
TrackSpec big_square(Vec2 origin = {}) {
  TrackSpec s;
  const double side = 400.0;
  s.waypoints = {{origin.x, origin.y},
                 {origin.x + side, origin.y},
                 {origin.x + side, origin.y + side},
                 {origin.x, origin.y + side}};
  s.lane_width_m = 1.0;
  return s;
}

}  // namespace

TEST(Camera, FrameDimensionsAndValidation) {
  const Track t(default_track());
  const CameraFrame f = render_camera_frame(t, {}, CameraModel{});
  EXPECT_EQ(f.width(), 160u);
  EXPECT_EQ(f.height(), 120u);
  EXPECT_EQ(f.pixels().size(), 160u * 120u * 3u);

  CameraModel bad;
  bad.image_width_px = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = {};
  bad.horizontal_fov_rad = 4.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  EXPECT_THROW(CameraFrame(2, 2, std::vector<std::uint8_t>(5)), ValidationError);
}

TEST(Camera, SkyAboveHorizonGroundBelow) {
  const Track t(big_square());
  const CameraModel cam;
  const CameraFrame f = render_camera_frame(t, {200.0, 0.0, 0.0, 0.0}, cam);
  const TrackColors colors;
  // focal = 80 / tan(30 deg); rows whose ray leans up past the pitch see sky.
  const double focal = 80.0 / std::tan(M_PI / 6.0);
  const int last_sky_row = static_cast<int>(std::floor(60.0 - 0.5 - focal * std::tan(15.0 * M_PI / 180.0)));
  for (std::size_t x = 0; x < f.width(); ++x) {
    EXPECT_EQ(f.at(x, 0), colors.sky);
    EXPECT_EQ(f.at(x, static_cast<std::size_t>(last_sky_row)), colors.sky);
    EXPECT_NE(f.at(x, static_cast<std::size_t>(last_sky_row + 1)), colors.sky);
  }
  // Straight ahead on the centerline the road is directly below.
  EXPECT_EQ(f.at(80, 119), colors.track);
}

TEST(Camera, MirrorSymmetryOnCenterline) {
  const Track t(big_square());
  const CameraFrame f = render_camera_frame(t, {200.0, 0.0, 0.0, 0.0}, CameraModel{});
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      ASSERT_EQ(f.at(x, y), f.at(f.width() - 1 - x, y)) << "pixel " << x << "," << y;
    }
  }
}

TEST(Camera, LateralOffsetShiftsRoadSideways) {
  const Track t(big_square());
  const TrackColors colors;
  auto road_centroid = [&](double y) {
    const CameraFrame f = render_camera_frame(t, {200.0, y, 0.0, 0.0}, CameraModel{});
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < f.height(); ++r) {
      for (std::size_t x = 0; x < f.width(); ++x) {
        if (f.at(x, r) == colors.track) {
          sum += static_cast<double>(x);
          ++n;
        }
      }
    }
    return sum / static_cast<double>(n);
  };
  // The +y side is to the right, so moving that way pushes the road left.
  EXPECT_NEAR(road_centroid(0.0), 79.5, 0.5);
  EXPECT_LT(road_centroid(0.3), 75.0);
  EXPECT_GT(road_centroid(-0.3), 84.0);
}

TEST(Camera, TranslationInvariance) {
  const Track a(big_square());
  const Track b(big_square({0.5, -0.25}));
  const CameraFrame fa = render_camera_frame(a, {200.0, 0.1, 0.05, 0.0}, CameraModel{});
  const CameraFrame fb = render_camera_frame(b, {200.5, -0.15, 0.05, 0.0}, CameraModel{});
  std::size_t differing = 0;
  for (std::size_t y = 0; y < fa.height(); ++y) {
    for (std::size_t x = 0; x < fa.width(); ++x) differing += !(fa.at(x, y) == fb.at(x, y));
  }
  // Rounding can only flip pixels sitting exactly on a color boundary.
  EXPECT_LE(differing, fa.width() * fa.height() / 200);
}

TEST(Camera, DeterministicRender) {
  const Track t(default_track());
  const VehicleState s{0.3, -0.9, 0.2, 1.0};
  EXPECT_EQ(render_camera_frame(t, s, CameraModel{}), render_camera_frame(t, s, CameraModel{}));
}
