#pragma once

#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace pilot {

/// Physical parameters of the car. Defaults describe a 300 x 200 x 300 mm
/// RC-scale chassis; wheelbase and actuator figures are assumptions.
struct VehicleParams {
  double wheelbase_m = 0.20;
  double max_wheel_angle_rad = std::numbers::pi / 6.0;
  double max_speed_mps = 3.0;
  double motor_time_constant_s = 0.5;
  double length_mm = 300.0;
  double width_mm = 200.0;
  double height_mm = 300.0;
  double mass_kg = 1.15;

  /// Throws ValidationError on a violated invariant.
  void validate() const;
};

/// Rear-axle pose and signed speed. World frame convention: a positive
/// heading change turns the car toward its right-hand side, so positive
/// steering is a right turn.
struct VehicleState {
  double x_m = 0.0;
  double y_m = 0.0;
  double heading_rad = 0.0;
  double speed_mps = 0.0;

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Normalised command pair; both channels are clamped to [-1, 1]. NaN maps to 0.
class ControlInput {
 public:
  ControlInput() = default;
  ControlInput(double steering, double throttle);

  double steering() const { return steering_; }
  double throttle() const { return throttle_; }

  friend bool operator==(const ControlInput&, const ControlInput&) = default;

 private:
  double steering_ = 0.0;
  double throttle_ = 0.0;
};

/// Clamp to [-1, 1]; NaN becomes 0.
double clamp_unit(double value);

/// Wrap an angle into (-pi, pi].
double wrap_angle(double angle_rad);

double steering_to_wheel_angle(const ControlInput& input, const VehicleParams& params);

/// Signed turning radius L / tan(delta); std::nullopt means driving straight.
std::optional<double> turning_radius(double wheel_angle_rad, const VehicleParams& params);

/// One explicit-Euler step of the kinematic bicycle model. The speed follows
/// a first-order lag toward throttle * max_speed (exact exponential update,
/// which cannot overshoot). Requires 0 < dt_s <= 0.1.
VehicleState step(const VehicleState& state, const ControlInput& input,
                  const VehicleParams& params, double dt_s);

struct FiraReport {
  bool pass = true;
  std::vector<std::string> violations;
};

inline constexpr double kFiraMaxLengthMm = 300.0;
inline constexpr double kFiraMaxWidthMm = 200.0;
inline constexpr double kFiraMaxHeightMm = 300.0;

FiraReport check_fira_constraints(const VehicleParams& params);

}  // namespace pilot
