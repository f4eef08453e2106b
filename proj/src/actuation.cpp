#include "pilotstack/actuation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "pilotstack/error.hpp"

namespace pilot {

void ServoConfig::validate() const {
  if (!(pwm_frequency_hz > 0.0)) throw ValidationError("servo.pwm_frequency_hz must be > 0");
  if (!(min_pulse_us < center_pulse_us && center_pulse_us < max_pulse_us))
    throw ValidationError("servo pulses must satisfy min < center < max");
  if (min_pulse_us < 0 || max_pulse_us > period_us())
    throw ValidationError("servo pulses must fit inside the PWM period");
  if (channel < 0 || channel >= kPwmChannels)
    throw ValidationError("servo.channel must be in [0, 15]");
}

std::string_view to_string(MotorDirection direction) {
  switch (direction) {
    case MotorDirection::Forward: return "forward";
    case MotorDirection::Reverse: return "reverse";
    case MotorDirection::Brake: return "brake";
  }
  return "brake";
}

int steering_to_pulse_us(double steering, const ServoConfig& cfg) {
  const double s = clamp_unit(steering);
  const double span = s <= 0.0 ? cfg.center_pulse_us - cfg.min_pulse_us
                               : cfg.max_pulse_us - cfg.center_pulse_us;
  return static_cast<int>(std::lround(cfg.center_pulse_us + s * span));
}

int pulse_to_duty_ticks(double pulse_us, const ServoConfig& cfg) {
  const double period = cfg.period_us();
  if (!(pulse_us >= 0.0 && pulse_us <= period)) {
    throw ValidationError("pulse of " + std::to_string(pulse_us) + " us does not fit the " +
                          std::to_string(period) + " us PWM period");
  }
  const long ticks = std::lround(pulse_us / period * kPwmResolution);
  return static_cast<int>(std::clamp(ticks, 0L, static_cast<long>(kPwmMaxTicks)));
}

HBridgeCommand throttle_to_hbridge(double throttle) {
  const double t = clamp_unit(throttle);
  if (t == 0.0) return {MotorDirection::Brake, 0};
  const auto duty = static_cast<int>(std::lround(std::abs(t) * kPwmMaxTicks));
  return {t > 0.0 ? MotorDirection::Forward : MotorDirection::Reverse, duty};
}

std::vector<PwmCommand> control_to_bus_writes(const ControlInput& input, const ServoConfig& servo_cfg,
                                              int motor_channel) {
  servo_cfg.validate();
  if (motor_channel < 0 || motor_channel >= kPwmChannels)
    throw ValidationError("motor channel must be in [0, 15]");
  if (motor_channel == servo_cfg.channel)
    throw ValidationError("servo and motor share PWM channel " + std::to_string(motor_channel));
  const int servo_ticks = pulse_to_duty_ticks(steering_to_pulse_us(input.steering(), servo_cfg), servo_cfg);
  const HBridgeCommand motor = throttle_to_hbridge(input.throttle());
  return {{servo_cfg.channel, servo_ticks}, {motor_channel, motor.duty_ticks}};
}

void MockPwmBus::write(const PwmCommand& command) { writes_.push_back(command); }

void MockPwmBus::dump_jsonl(std::ostream& out) const {
  for (std::size_t i = 0; i < writes_.size(); ++i) {
    out << nlohmann::ordered_json{{"seq", i}, {"channel", writes_[i].channel},
                          {"duty_ticks", writes_[i].duty_ticks}}
               .dump()
        << '\n';
  }
}

}  // namespace pilot
