#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pilotstack/autopilot.hpp"
#include "pilotstack/camera.hpp"
#include "pilotstack/track.hpp"
#include "pilotstack/vehicle.hpp"

namespace pilot {

struct LapMetrics {
  bool completed = false;
  double lap_time_s = 0.0;
  double distance_m = 0.0;
  double avg_speed_mps = 0.0;
  std::size_t offtrack_events = 0;
  double max_lateral_offset_m = 0.0;
};

/// Thrown when the scripted expert is asked to drive from too far off the lane.
class ExpertError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExpertConfig {
  double lookahead_m = 0.6;
  double cruise_throttle = 0.4;
  /// Throttle falls by this fraction at a path curvature of 1/m or more.
  double curve_slowdown = 0.05;
};

/// Pure pursuit toward the centerline point lookahead_m ahead of the rear
/// axle's projection.
ControlInput expert_controller(const VehicleState& state, const Track& track, const VehicleParams& vehicle,
                               const ExpertConfig& config = {});

Driver expert_driver(const Track& track, const VehicleParams& vehicle, const ExpertConfig& config = {});

/// Pose on the track at an arc position, shifted left of travel by
/// `lateral_m` and rotated by `heading_offset_rad`; speed zero.
VehicleState start_pose(const Track& track, double arc_m, double lateral_m = 0.0, double heading_offset_rad = 0.0);

/// Progress is unwrapped across the start line. The lap time is interpolated
/// between the two rows that straddle one track length; the metrics cover
/// the rows up to that point. An off-track event is one contiguous run of
/// rows with |lateral offset| > lane_width / 2.
LapMetrics score_episode(const EpisodeTrace& trace, const Track& track);

nlohmann::ordered_json metrics_to_json(const LapMetrics& metrics);
std::string metrics_table(const LapMetrics& metrics);

struct SynthOptions {
  VehicleParams vehicle;
  CameraModel camera;
  ExpertConfig expert;
  double record_rate_hz = 20.0;
  double noise_level = 0.1;
  /// Each noise draw is held for this many steps.
  std::size_t noise_hold_steps = 1;
  double start_lateral_m = 0.1;
  double start_heading_rad = 0.15;
  std::size_t max_episode_steps = 400;
  std::size_t max_failed_episodes = 200;
  std::string track_id = "default";
};

struct SynthReport {
  std::filesystem::path dir;
  std::size_t records = 0;
  std::size_t episodes = 0;
  std::size_t failed_episodes = 0;
};

using LogFn = std::function<void(std::string_view)>;

/// Drives the expert from seeded random starts, applying uniform steering
/// noise of +-noise_level while recording the clean expert command as the
/// label. Episodes end after one lap; an episode that leaves the lane is
/// discarded and retried with the next sub-seed. Writes exactly n_samples
/// records to a new session at `out_dir`.
SynthReport synthesize_dataset(const Track& track, std::size_t n_samples, std::uint64_t seed,
                               const std::filesystem::path& out_dir, const SynthOptions& options = {},
                               const LogFn& log = {});

}  // namespace pilot
