#include "pilotstack/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <variant>

#include "pilotstack/error.hpp"

namespace pilot {

namespace {

using Value = std::variant<bool, std::int64_t, double, std::string>;

constexpr double kDeg = std::numbers::pi / 180.0;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

Value parse_value(std::string_view raw, const std::string& where) {
  if (raw.empty()) throw ValidationError(where + ": missing value");
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw ValidationError(where + ": unterminated string");
    return std::string(raw.substr(1, raw.size() - 2));
  }
  const bool integral = raw.find_first_of(".eE") == std::string_view::npos;
  if (integral) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec == std::errc() && ptr == raw.data() + raw.size()) return v;
  } else {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec == std::errc() && ptr == raw.data() + raw.size()) return v;
  }
  throw ValidationError(where + ": cannot parse value '" + std::string(raw) + "'");
}

double as_double(const Value& v, const std::string& where) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw ValidationError(where + ": expected a number");
}

std::int64_t as_int(const Value& v, const std::string& where) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  throw ValidationError(where + ": expected an integer");
}

std::size_t as_count(const Value& v, const std::string& where) {
  const auto i = as_int(v, where);
  if (i < 0) throw ValidationError(where + ": expected a non-negative integer");
  return static_cast<std::size_t>(i);
}

using Setter = std::function<void(AppConfig&, const Value&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> table = [] {
    std::map<std::string, std::map<std::string, Setter>> t;
    auto real = [](auto get) -> Setter {
      return [get](AppConfig& c, const Value& v, const std::string& w) { get(c) = as_double(v, w); };
    };
    auto degrees = [](auto get) -> Setter {
      return [get](AppConfig& c, const Value& v, const std::string& w) { get(c) = as_double(v, w) * kDeg; };
    };
    auto count = [](auto get) -> Setter {
      return [get](AppConfig& c, const Value& v, const std::string& w) { get(c) = as_count(v, w); };
    };
    auto integer = [](auto get) -> Setter {
      return [get](AppConfig& c, const Value& v, const std::string& w) {
        get(c) = static_cast<std::remove_reference_t<decltype(get(c))>>(as_int(v, w));
      };
    };

    auto& vehicle = t["vehicle"];
    vehicle["wheelbase_m"] = real([](AppConfig& c) -> double& { return c.vehicle.wheelbase_m; });
    vehicle["max_wheel_angle_deg"] = degrees([](AppConfig& c) -> double& { return c.vehicle.max_wheel_angle_rad; });
    vehicle["max_speed_mps"] = real([](AppConfig& c) -> double& { return c.vehicle.max_speed_mps; });
    vehicle["motor_time_constant_s"] = real([](AppConfig& c) -> double& { return c.vehicle.motor_time_constant_s; });
    vehicle["length_mm"] = real([](AppConfig& c) -> double& { return c.vehicle.length_mm; });
    vehicle["width_mm"] = real([](AppConfig& c) -> double& { return c.vehicle.width_mm; });
    vehicle["height_mm"] = real([](AppConfig& c) -> double& { return c.vehicle.height_mm; });
    vehicle["mass_kg"] = real([](AppConfig& c) -> double& { return c.vehicle.mass_kg; });

    auto& camera = t["camera"];
    camera["image_width_px"] = count([](AppConfig& c) -> std::size_t& { return c.camera.image_width_px; });
    camera["image_height_px"] = count([](AppConfig& c) -> std::size_t& { return c.camera.image_height_px; });
    camera["horizontal_fov_deg"] = degrees([](AppConfig& c) -> double& { return c.camera.horizontal_fov_rad; });
    camera["mount_height_m"] = real([](AppConfig& c) -> double& { return c.camera.mount_height_m; });
    camera["pitch_down_deg"] = degrees([](AppConfig& c) -> double& { return c.camera.pitch_down_rad; });
    camera["forward_offset_m"] = real([](AppConfig& c) -> double& { return c.camera.forward_offset_m; });

    auto& servo = t["servo"];
    servo["pwm_frequency_hz"] = real([](AppConfig& c) -> double& { return c.servo.pwm_frequency_hz; });
    servo["min_pulse_us"] = integer([](AppConfig& c) -> int& { return c.servo.min_pulse_us; });
    servo["center_pulse_us"] = integer([](AppConfig& c) -> int& { return c.servo.center_pulse_us; });
    servo["max_pulse_us"] = integer([](AppConfig& c) -> int& { return c.servo.max_pulse_us; });
    servo["channel"] = integer([](AppConfig& c) -> int& { return c.servo.channel; });
    servo["motor_channel"] = integer([](AppConfig& c) -> int& { return c.motor_channel; });

    auto& pilot = t["pilot"];
    pilot["loop_rate_hz"] = real([](AppConfig& c) -> double& { return c.pilot.loop_rate_hz; });
    pilot["throttle_scale"] = real([](AppConfig& c) -> double& { return c.pilot.throttle_scale; });
    pilot["steering_trim"] = real([](AppConfig& c) -> double& { return c.pilot.steering_trim; });

    auto& train = t["train"];
    train["epochs"] = count([](AppConfig& c) -> std::size_t& { return c.train.epochs; });
    train["batch_size"] = count([](AppConfig& c) -> std::size_t& { return c.train.batch_size; });
    train["learning_rate"] = real([](AppConfig& c) -> double& { return c.train.learning_rate; });
    train["adam_beta1"] = real([](AppConfig& c) -> double& { return c.train.adam_beta1; });
    train["adam_beta2"] = real([](AppConfig& c) -> double& { return c.train.adam_beta2; });
    train["adam_eps"] = real([](AppConfig& c) -> double& { return c.train.adam_eps; });
    train["seed"] = [](AppConfig& c, const Value& v, const std::string& w) {
      c.train.seed = static_cast<std::uint64_t>(as_count(v, w));
    };
    train["val_fraction"] = real([](AppConfig& c) -> double& { return c.train.val_fraction; });

    auto& synth = t["synth"];
    synth["noise_level"] = real([](AppConfig& c) -> double& { return c.synth.noise_level; });
    synth["noise_hold_steps"] = count([](AppConfig& c) -> std::size_t& { return c.synth.noise_hold_steps; });
    synth["lookahead_m"] = real([](AppConfig& c) -> double& { return c.synth.lookahead_m; });
    synth["cruise_throttle"] = real([](AppConfig& c) -> double& { return c.synth.cruise_throttle; });
    synth["curve_slowdown"] = real([](AppConfig& c) -> double& { return c.synth.curve_slowdown; });

    t["track"]["path"] = [](AppConfig& c, const Value& v, const std::string& w) {
      const auto* s = std::get_if<std::string>(&v);
      if (s == nullptr) throw ValidationError(w + ": expected a string");
      c.track_path = *s;
    };
    return t;
  }();
  return table;
}

}  // namespace

void AppConfig::validate() const {
  vehicle.validate();
  camera.validate();
  servo.validate();
  if (motor_channel < 0 || motor_channel >= kPwmChannels) throw ValidationError("servo.motor_channel must be in [0, 15]");
  if (motor_channel == servo.channel) throw ValidationError("servo.motor_channel collides with servo.channel");
  pilot.validate();
  train.validate();
  if (!(synth.noise_level >= 0.0 && synth.noise_level <= 1.0)) throw ValidationError("synth.noise_level must be in [0, 1]");
  if (synth.noise_hold_steps < 1) throw ValidationError("synth.noise_hold_steps must be >= 1");
  if (!(synth.lookahead_m > 0.0)) throw ValidationError("synth.lookahead_m must be > 0");
  if (!(synth.cruise_throttle > 0.0 && synth.cruise_throttle <= 1.0)) {
    throw ValidationError("synth.cruise_throttle must be in (0, 1]");
  }
  if (!(synth.curve_slowdown >= 0.0 && synth.curve_slowdown < 1.0)) {
    throw ValidationError("synth.curve_slowdown must be in [0, 1)");
  }
  if (track_path.empty()) throw ValidationError("track.path must not be empty");
}

SynthOptions AppConfig::synth_options() const {
  SynthOptions o;
  o.vehicle = vehicle;
  o.camera = camera;
  o.expert = {synth.lookahead_m, synth.cruise_throttle, synth.curve_slowdown};
  o.record_rate_hz = pilot.loop_rate_hz;
  o.noise_level = synth.noise_level;
  o.noise_hold_steps = synth.noise_hold_steps;
  o.track_id = track_path == "default" ? "default" : std::filesystem::path(track_path).stem().string();
  return o;
}

AppConfig parse_config(std::string_view text, std::string_view name) {
  AppConfig config;
  const auto& table = schema();
  const std::map<std::string, Setter>* section = nullptr;
  std::string section_name;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string where = std::string(name) + ":" + std::to_string(line_no);
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + ": malformed section header");
      section_name = std::string(trim(line.substr(1, line.size() - 2)));
      const auto it = table.find(section_name);
      if (it == table.end()) throw ValidationError(where + ": unknown section [" + section_name + "]");
      section = &it->second;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError(where + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (section == nullptr) throw ValidationError(where + ": key '" + key + "' outside a section");
    const auto it = section->find(key);
    if (it == section->end()) throw ValidationError(where + ": unknown key '" + section_name + "." + key + "'");
    it->second(config, parse_value(trim(line.substr(eq + 1)), where), where + " (" + section_name + "." + key + ")");
  }
  return config;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string to_config_text(const AppConfig& c) {
  std::ostringstream out;
  auto real = [&](const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    out << key << " = " << s << '\n';
  };
  auto integer = [&](const char* key, long long v) { out << key << " = " << v << '\n'; };

  out << "[vehicle]\n";
  real("wheelbase_m", c.vehicle.wheelbase_m);
  real("max_wheel_angle_deg", c.vehicle.max_wheel_angle_rad / kDeg);
  real("max_speed_mps", c.vehicle.max_speed_mps);
  real("motor_time_constant_s", c.vehicle.motor_time_constant_s);
  real("length_mm", c.vehicle.length_mm);
  real("width_mm", c.vehicle.width_mm);
  real("height_mm", c.vehicle.height_mm);
  real("mass_kg", c.vehicle.mass_kg);
  out << "\n[camera]\n";
  integer("image_width_px", static_cast<long long>(c.camera.image_width_px));
  integer("image_height_px", static_cast<long long>(c.camera.image_height_px));
  real("horizontal_fov_deg", c.camera.horizontal_fov_rad / kDeg);
  real("mount_height_m", c.camera.mount_height_m);
  real("pitch_down_deg", c.camera.pitch_down_rad / kDeg);
  real("forward_offset_m", c.camera.forward_offset_m);
  out << "\n[servo]\n";
  real("pwm_frequency_hz", c.servo.pwm_frequency_hz);
  integer("min_pulse_us", c.servo.min_pulse_us);
  integer("center_pulse_us", c.servo.center_pulse_us);
  integer("max_pulse_us", c.servo.max_pulse_us);
  integer("channel", c.servo.channel);
  integer("motor_channel", c.motor_channel);
  out << "\n[pilot]\n";
  real("loop_rate_hz", c.pilot.loop_rate_hz);
  real("throttle_scale", c.pilot.throttle_scale);
  real("steering_trim", c.pilot.steering_trim);
  out << "\n[train]\n";
  integer("epochs", static_cast<long long>(c.train.epochs));
  integer("batch_size", static_cast<long long>(c.train.batch_size));
  real("learning_rate", c.train.learning_rate);
  real("adam_beta1", c.train.adam_beta1);
  real("adam_beta2", c.train.adam_beta2);
  real("adam_eps", c.train.adam_eps);
  integer("seed", static_cast<long long>(c.train.seed));
  real("val_fraction", c.train.val_fraction);
  out << "\n[synth]\n";
  real("noise_level", c.synth.noise_level);
  integer("noise_hold_steps", static_cast<long long>(c.synth.noise_hold_steps));
  real("lookahead_m", c.synth.lookahead_m);
  real("cruise_throttle", c.synth.cruise_throttle);
  real("curve_slowdown", c.synth.curve_slowdown);
  out << "\n[track]\npath = \"" << c.track_path << "\"\n";
  return out.str();
}

TrackSpec load_track_for(const AppConfig& config) {
  if (config.track_path == "default") return default_track();
  return load_track_spec(config.track_path);
}

}  // namespace pilot
