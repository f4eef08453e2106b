#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "pilotstack/vehicle.hpp"

namespace pilot {

inline constexpr int kPwmChannels = 16;
inline constexpr int kPwmMaxTicks = 4095;  // 12-bit counter
inline constexpr int kPwmResolution = 4096;

struct ServoConfig {
  double pwm_frequency_hz = 50.0;
  int min_pulse_us = 1000;
  int center_pulse_us = 1500;
  int max_pulse_us = 2000;
  int channel = 0;

  void validate() const;
  double period_us() const { return 1e6 / pwm_frequency_hz; }
};

enum class MotorDirection { Forward, Reverse, Brake };

std::string_view to_string(MotorDirection direction);

struct HBridgeCommand {
  MotorDirection direction = MotorDirection::Brake;
  int duty_ticks = 0;

  friend bool operator==(const HBridgeCommand&, const HBridgeCommand&) = default;
};

struct PwmCommand {
  int channel = 0;
  int duty_ticks = 0;

  friend bool operator==(const PwmCommand&, const PwmCommand&) = default;
};

/// Piecewise-linear servo curve through (min, center, max), rounded to the
/// nearest microsecond (half away from zero). Steering is clamped.
int steering_to_pulse_us(double steering, const ServoConfig& cfg);

/// round(pulse / period * 4096) clamped to 12 bits. Throws ValidationError
/// when the pulse is negative or longer than the PWM period.
int pulse_to_duty_ticks(double pulse_us, const ServoConfig& cfg);

HBridgeCommand throttle_to_hbridge(double throttle);

/// Servo write first, then the motor-enable write. Throws ValidationError on
/// a channel collision or an out-of-range motor channel.
std::vector<PwmCommand> control_to_bus_writes(const ControlInput& input, const ServoConfig& servo_cfg,
                                              int motor_channel);

/// Sink for PWM writes; a hardware implementation would talk I2C.
class PwmBus {
 public:
  virtual ~PwmBus() = default;
  virtual void write(const PwmCommand& command) = 0;
};

/// Records every write in order.
class MockPwmBus final : public PwmBus {
 public:
  void write(const PwmCommand& command) override;
  const std::vector<PwmCommand>& writes() const { return writes_; }
  void clear() { writes_.clear(); }
  /// One JSON object per line: {"seq":n,"channel":c,"duty_ticks":d}.
  void dump_jsonl(std::ostream& out) const;

 private:
  std::vector<PwmCommand> writes_;
};

}  // namespace pilot
