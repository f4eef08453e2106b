#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "pilotstack/error.hpp"
#include "pilotstack/rng.hpp"
#include "pilotstack/track.hpp"

using namespace pilot;

namespace {

TrackSpec square(double side, double lane = 0.4) {
  TrackSpec s;
  s.waypoints = {{0, 0}, {side, 0}, {side, side}, {0, side}};
  s.lane_width_m = lane;
  return s;
}

}  // namespace

TEST(Track, DefaultIsThirteenMetres) {
  const Track t(default_track());
  EXPECT_NEAR(t.length(), 13.0, 0.01);
  EXPECT_EQ(t.spec().waypoints.size(), 130u);
  EXPECT_DOUBLE_EQ(t.half_width(), 0.3);
}

TEST(Track, SquareProjection) {
  const Track t(square(4.0));
  EXPECT_DOUBLE_EQ(t.length(), 16.0);
  // Travel along +x on the first edge; "left" of travel is the -y side.
  Projection p = t.project({1.0, -0.1});
  EXPECT_NEAR(p.arc_position_m, 1.0, 1e-12);
  EXPECT_NEAR(p.lateral_offset_m, 0.1, 1e-12);
  p = t.project({1.0, 0.15});
  EXPECT_NEAR(p.lateral_offset_m, -0.15, 1e-12);
  p = t.project({4.1, 2.0});
  EXPECT_NEAR(p.arc_position_m, 6.0, 1e-12);
  EXPECT_TRUE(t.contains({1.0, 0.19}));
  EXPECT_FALSE(t.contains({1.0, 0.21}));
  EXPECT_TRUE(is_on_track(t, {2.0, 4.0}));
  EXPECT_NEAR(project_to_centerline(t, {0.0, 2.0}).arc_position_m, 14.0, 1e-12);
}

TEST(Track, PointAtAndHeadingWrap) {
  const Track t(square(4.0));
  const Vec2 a = t.point_at(17.0);
  EXPECT_NEAR(a.x, 1.0, 1e-12);
  EXPECT_NEAR(a.y, 0.0, 1e-12);
  EXPECT_NEAR(t.heading_at(5.0), std::numbers::pi / 2.0, 1e-12);
  const Vec2 b = t.point_at(-1.0);
  EXPECT_NEAR(b.x, 0.0, 1e-12);
  EXPECT_NEAR(b.y, 1.0, 1e-12);
}

TEST(Track, ProjectionOfCenterlinePointsRoundTrips) {
  const Track t(default_track());
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double arc = rng.uniform(0.0, t.length());
    const Projection p = t.project(t.point_at(arc));
    EXPECT_NEAR(p.lateral_offset_m, 0.0, 1e-9);
    const double d = std::abs(p.arc_position_m - arc);
    EXPECT_LT(std::min(d, t.length() - d), 1e-9);
  }
}

TEST(Track, NearDistanceAgreesWithProjection) {
  const Track t(default_track());
  Rng rng(11);
  for (int i = 0; i < 3000; ++i) {
    const Vec2 p{rng.uniform(-4.0, 4.0), rng.uniform(-2.0, 2.0)};
    const double d = std::abs(t.project(p).lateral_offset_m);
    const double n = t.near_distance(p);
    if (d <= t.half_width()) {
      EXPECT_NEAR(n, d, 1e-12);
    } else {
      EXPECT_TRUE(std::isinf(n));
    }
  }
  EXPECT_TRUE(std::isinf(t.near_distance({1e9, 1e9})));
}

TEST(Track, SurfaceColors) {
  const Track t(square(4.0));
  const TrackColors c;
  EXPECT_EQ(t.surface_color({2.0, 0.0}), c.track);
  EXPECT_EQ(t.surface_color({2.0, 0.19}), c.line);
  EXPECT_EQ(t.surface_color({2.0, -0.19}), c.line);
  EXPECT_EQ(t.surface_color({2.0, 0.25}), c.offtrack);
  EXPECT_EQ(t.surface_color({2.0, 2.0}), c.offtrack);
}

TEST(Track, ValidationRejectsBadSpecs) {
  TrackSpec s = square(4.0);
  s.waypoints.pop_back();
  EXPECT_THROW(validate_track(s), ValidationError);

  s = square(4.0);
  s.lane_width_m = 0.0;
  EXPECT_THROW(validate_track(s), ValidationError);

  s = square(4.0);
  s.waypoints[1] = s.waypoints[0];
  EXPECT_THROW(validate_track(s), ValidationError);

  // Bow tie: edges cross.
  s.waypoints = {{0, 0}, {4, 4}, {4, 0}, {0, 4}};
  s.lane_width_m = 0.4;
  EXPECT_THROW(validate_track(s), ValidationError);

  s = square(4.0);
  s.waypoints[2].x = std::nan("");
  EXPECT_THROW(validate_track(s), ValidationError);

  EXPECT_NO_THROW(validate_track(default_track()));
  EXPECT_THROW(Track(TrackSpec{}), ValidationError);
}

TEST(Track, CenterlineLength) {
  EXPECT_DOUBLE_EQ(centerline_length(square(2.5)), 10.0);
}

TEST(ProgressTracker, UnwrapsAcrossStartLine) {
  const Track t(square(4.0));
  ProgressTracker pt(t, t.point_at(15.0));
  EXPECT_NEAR(pt.update(t.point_at(15.5)), 0.5, 1e-12);
  EXPECT_NEAR(pt.update(t.point_at(0.5)), 1.5, 1e-12);
  EXPECT_NEAR(pt.update(t.point_at(4.0)), 5.0, 1e-12);
  EXPECT_NEAR(pt.update(t.point_at(3.0)), 4.0, 1e-12);
}

TEST(ProgressTracker, MonotoneForForwardMotion) {
  const Track t(default_track());
  ProgressTracker pt(t, t.point_at(0.0));
  double prev = 0.0;
  for (int i = 1; i <= 300; ++i) {
    const double now = pt.update(t.point_at(0.05 * i));
    EXPECT_GE(now, prev - 1e-12);
    prev = now;
  }
  EXPECT_NEAR(prev, 15.0, 1e-9);
}

TEST(TrackJson, RoundTrip) {
  TrackSpec s = square(3.0, 0.5);
  s.colors.line = {1, 2, 3};
  const auto path = std::filesystem::temp_directory_path() / "pilotstack_track_test.json";
  save_track_spec(s, path);
  const TrackSpec back = load_track_spec(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.waypoints, s.waypoints);
  EXPECT_EQ(back.lane_width_m, s.lane_width_m);
  EXPECT_EQ(back.colors.line, s.colors.line);
  EXPECT_EQ(back.colors.sky, s.colors.sky);
}

TEST(TrackJson, RejectsInvalidTrackFile) {
  const auto path = std::filesystem::temp_directory_path() / "pilotstack_track_bad.json";
  {
    std::ofstream out(path);
    out << R"({"waypoints": [[0,0],[1,0]], "lane_width_m": 0.5})";
  }
  EXPECT_ANY_THROW(load_track_spec(path));
  std::filesystem::remove(path);
}
