#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pilotstack/actuation.hpp"
#include "pilotstack/autopilot.hpp"
#include "pilotstack/camera.hpp"
#include "pilotstack/eval.hpp"
#include "pilotstack/nn/trainer.hpp"
#include "pilotstack/track.hpp"
#include "pilotstack/vehicle.hpp"

namespace pilot {

struct SynthSettings {
  double noise_level = 0.1;
  std::size_t noise_hold_steps = 1;
  double lookahead_m = 0.6;
  double cruise_throttle = 0.4;
  double curve_slowdown = 0.05;
};

/// Everything the CLI reads from its config file. Files hold flat
/// [section] blocks of `key = value` lines; angles are in degrees.
struct AppConfig {
  VehicleParams vehicle;
  CameraModel camera;
  ServoConfig servo;
  int motor_channel = 1;
  PilotConfig pilot;
  nn::TrainConfig train;
  SynthSettings synth;
  std::string track_path = "default";

  void validate() const;
  SynthOptions synth_options() const;
};

/// Throws ValidationError naming the line for syntax errors, unknown
/// sections or keys, and wrongly typed values. Missing keys keep defaults.
AppConfig parse_config(std::string_view text, std::string_view name = "<config>");
AppConfig load_config(const std::filesystem::path& path);

/// Serialises every key. Parsing the text back reproduces `config` exactly
/// except for angles, which pass through degrees.
std::string to_config_text(const AppConfig& config);

/// "default" selects the built-in oval; anything else is a track JSON path.
TrackSpec load_track_for(const AppConfig& config);

}  // namespace pilot
