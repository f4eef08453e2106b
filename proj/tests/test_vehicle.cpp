#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pilotstack/error.hpp"
#include "pilotstack/rng.hpp"
#include "pilotstack/vehicle.hpp"

using namespace pilot;

namespace {

constexpr double kPi = std::numbers::pi;

// Radius of the circle traced by integrating constant steering at constant speed.
struct CircleRun {
  double diameter = 0.0;
  double closure = 0.0;
};

CircleRun drive_circle(double steering, double dt) {
  VehicleParams p;
  const double speed = 1.5;
  VehicleState s{0.0, 0.0, 0.0, speed};
  const ControlInput in(steering, speed / p.max_speed_mps);
  double turned = 0.0;
  double far = 0.0;
  while (turned < 2.0 * kPi) {
    const VehicleState next = step(s, in, p, dt);
    turned += std::abs(wrap_angle(next.heading_rad - s.heading_rad));
    s = next;
    far = std::max(far, std::hypot(s.x_m, s.y_m));
  }
  return {far, std::hypot(s.x_m, s.y_m)};
}

}  // namespace

TEST(ControlInput, ClampsAndMapsNanToZero) {
  const ControlInput c(2.5, -7.0);
  EXPECT_EQ(c.steering(), 1.0);
  EXPECT_EQ(c.throttle(), -1.0);
  const ControlInput n(std::nan(""), 0.25);
  EXPECT_EQ(n.steering(), 0.0);
  EXPECT_EQ(n.throttle(), 0.25);
}

TEST(WrapAngle, RangeProperty) {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform(-100.0, 100.0);
    const double w = wrap_angle(a);
    EXPECT_GT(w, -kPi - 1e-12);
    EXPECT_LE(w, kPi + 1e-12);
    EXPECT_NEAR(std::remainder(a - w, 2.0 * kPi), 0.0, 1e-9);
  }
}

TEST(Step, StraightLineAtRest) {
  VehicleParams p;
  const VehicleState s = step({}, ControlInput(0.0, 0.0), p, 0.05);
  EXPECT_EQ(s, VehicleState{});
}

TEST(Step, StraightLineMovesAlongHeading) {
  VehicleParams p;
  VehicleState s{0.0, 0.0, 0.0, 1.0};
  const ControlInput in(0.0, 1.0 / 3.0);
  for (int i = 0; i < 100; ++i) s = step(s, in, p, 0.01);
  EXPECT_NEAR(s.x_m, 1.0, 1e-9);
  EXPECT_NEAR(s.y_m, 0.0, 1e-12);
  EXPECT_NEAR(s.heading_rad, 0.0, 1e-12);
}

TEST(Step, SpeedLagApproachesTargetWithoutOvershoot) {
  VehicleParams p;
  VehicleState s;
  double prev = 0.0;
  for (int i = 0; i < 400; ++i) {
    s = step(s, ControlInput(0.0, 1.0), p, 0.05);
    EXPECT_GE(s.speed_mps, prev);
    EXPECT_LE(s.speed_mps, p.max_speed_mps);
    prev = s.speed_mps;
  }
  EXPECT_NEAR(s.speed_mps, p.max_speed_mps, 1e-6);
  // After one time constant the lag has covered 1 - 1/e of the gap.
  VehicleState t;
  for (int i = 0; i < 50; ++i) t = step(t, ControlInput(0.0, 1.0), p, 0.01);
  EXPECT_NEAR(t.speed_mps, p.max_speed_mps * (1.0 - std::exp(-1.0)), 1e-9);
}

TEST(Step, ReverseThrottleGivesNegativeSpeed) {
  VehicleParams p;
  VehicleState s;
  for (int i = 0; i < 20; ++i) s = step(s, ControlInput(0.0, -0.5), p, 0.05);
  EXPECT_LT(s.speed_mps, 0.0);
  EXPECT_LT(s.x_m, 0.0);
}

TEST(Step, PositiveSteeringIncreasesHeading) {
  VehicleParams p;
  VehicleState s{0.0, 0.0, 0.0, 1.0};
  s = step(s, ControlInput(0.5, 1.0 / 3.0), p, 0.05);
  EXPECT_GT(s.heading_rad, 0.0);
}

TEST(Step, RejectsBadTimeStep) {
  VehicleParams p;
  EXPECT_THROW(step({}, {}, p, 0.0), ValidationError);
  EXPECT_THROW(step({}, {}, p, -0.01), ValidationError);
  EXPECT_THROW(step({}, {}, p, 0.2), ValidationError);
  EXPECT_NO_THROW(step({}, {}, p, 0.1));
}

TEST(TurningRadius, MatchesWheelbaseOverTan) {
  VehicleParams p;
  EXPECT_FALSE(turning_radius(0.0, p).has_value());
  const double delta = steering_to_wheel_angle(ControlInput(1.0, 0.0), p);
  EXPECT_DOUBLE_EQ(delta, kPi / 6.0);
  EXPECT_NEAR(*turning_radius(delta, p), 0.2 / std::tan(kPi / 6.0), 1e-12);
  EXPECT_NEAR(*turning_radius(-delta, p), -0.2 / std::tan(kPi / 6.0), 1e-12);
}

// Constant steering at dt = 1e-3 traces a circle of radius L / tan(delta).
class CircleClosure : public ::testing::TestWithParam<double> {};

TEST_P(CircleClosure, WithinOnePercent) {
  const double steering = GetParam();
  const double radius = 0.2 / std::tan(steering * kPi / 6.0);
  const CircleRun run = drive_circle(steering, 1e-3);
  EXPECT_NEAR(run.diameter / 2.0, radius, 0.01 * radius);
  EXPECT_LT(run.closure, 0.01 * radius);
}

INSTANTIATE_TEST_SUITE_P(Angles, CircleClosure, ::testing::Values(0.25, 0.5, 1.0));

TEST(Fira, DefaultPassesAndOversizeFails) {
  VehicleParams p;
  EXPECT_TRUE(check_fira_constraints(p).pass);
  p.length_mm = 301.0;
  const FiraReport r = check_fira_constraints(p);
  EXPECT_FALSE(r.pass);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_NE(r.violations[0].find("length"), std::string::npos);
  VehicleParams q;
  q.width_mm = 200.5;
  q.height_mm = 300.1;
  EXPECT_EQ(check_fira_constraints(q).violations.size(), 2u);
}

TEST(VehicleParams, Validation) {
  VehicleParams p;
  EXPECT_NO_THROW(p.validate());
  p.wheelbase_m = 0.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.max_wheel_angle_rad = kPi / 2.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.motor_time_constant_s = -1.0;
  EXPECT_THROW(p.validate(), ValidationError);
}
