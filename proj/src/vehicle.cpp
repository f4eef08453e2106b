#include "pilotstack/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pilotstack/error.hpp"

namespace pilot {

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace

void VehicleParams::validate() const {
  require(wheelbase_m > 0.0, "vehicle.wheelbase_m must be > 0");
  require(max_wheel_angle_rad > 0.0 && max_wheel_angle_rad < std::numbers::pi / 2.0,
          "vehicle.max_wheel_angle_rad must be in (0, pi/2)");
  require(max_speed_mps > 0.0, "vehicle.max_speed_mps must be > 0");
  require(motor_time_constant_s > 0.0, "vehicle.motor_time_constant_s must be > 0");
  require(length_mm > 0.0 && width_mm > 0.0 && height_mm > 0.0,
          "vehicle dimensions must be > 0");
  require(mass_kg > 0.0, "vehicle.mass_kg must be > 0");
}

double clamp_unit(double value) {
  if (std::isnan(value)) return 0.0;
  return std::clamp(value, -1.0, 1.0);
}

ControlInput::ControlInput(double steering, double throttle)
    : steering_(clamp_unit(steering)), throttle_(clamp_unit(throttle)) {}

double wrap_angle(double angle_rad) {
  double r = std::remainder(angle_rad, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

double steering_to_wheel_angle(const ControlInput& input, const VehicleParams& params) {
  return input.steering() * params.max_wheel_angle_rad;
}

std::optional<double> turning_radius(double wheel_angle_rad, const VehicleParams& params) {
  if (std::abs(wheel_angle_rad) < 1e-9) return std::nullopt;
  return params.wheelbase_m / std::tan(wheel_angle_rad);
}

VehicleState step(const VehicleState& state, const ControlInput& input,
                  const VehicleParams& params, double dt_s) {
  if (!(dt_s > 0.0 && dt_s <= 0.1)) {
    std::ostringstream msg;
    msg << "step: dt_s must be in (0, 0.1], got " << dt_s;
    throw ValidationError(msg.str());
  }
  const double wheel_angle = steering_to_wheel_angle(input, params);
  const double v = state.speed_mps;

  VehicleState next;
  next.x_m = state.x_m + v * std::cos(state.heading_rad) * dt_s;
  next.y_m = state.y_m + v * std::sin(state.heading_rad) * dt_s;
  next.heading_rad =
      wrap_angle(state.heading_rad + (v / params.wheelbase_m) * std::tan(wheel_angle) * dt_s);

  const double target = input.throttle() * params.max_speed_mps;
  const double alpha = -std::expm1(-dt_s / params.motor_time_constant_s);
  next.speed_mps = std::clamp(v + (target - v) * alpha, -params.max_speed_mps,
                              params.max_speed_mps);
  return next;
}

FiraReport check_fira_constraints(const VehicleParams& params) {
  FiraReport report;
  auto check = [&](double value, double bound, const char* name) {
    if (value > bound) {
      std::ostringstream msg;
      msg << name << " " << value << " mm exceeds " << bound << " mm";
      report.violations.push_back(msg.str());
    }
  };
  check(params.length_mm, kFiraMaxLengthMm, "length");
  check(params.width_mm, kFiraMaxWidthMm, "width");
  check(params.height_mm, kFiraMaxHeightMm, "height");
  report.pass = report.violations.empty();
  return report;
}

}  // namespace pilot
