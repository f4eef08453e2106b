#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pilotstack/camera.hpp"
#include "pilotstack/nn/model.hpp"
#include "pilotstack/track.hpp"
#include "pilotstack/vehicle.hpp"

namespace pilot {

struct PilotConfig {
  double loop_rate_hz = 20.0;
  double throttle_scale = 1.0;  // in (0, 1]
  double steering_trim = 0.0;   // in [-0.2, 0.2]

  void validate() const;
  double dt_s() const { return 1.0 / loop_rate_hz; }
};

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Overlay arrow in image coordinates (x right, y down).
struct MovementVector {
  PixelPoint origin;
  PixelPoint endpoint;
};

inline constexpr double kMovementVectorSweepRad = 0.7853981633974483;  // 45 degrees at full steering
inline constexpr double kMovementVectorLengthFraction = 0.4;

/// Bilinear resize (corner-aligned) to the model input size, then /255.
/// Returns shape (height, width, 3).
nn::Tensor preprocess(const CameraFrame& frame, std::size_t height = 120, std::size_t width = 160);

struct HeadOutputs {
  double steering = 0.0;
  double throttle = 0.0;
};

/// Raw network outputs for one frame, inference mode.
HeadOutputs infer_heads(const nn::ModelParams& params, const CameraFrame& frame);

/// Clamps the raw heads, adds the trim (clamped again) and scales throttle.
ControlInput heads_to_control(const HeadOutputs& heads, const PilotConfig& config);

ControlInput predict(const nn::ModelParams& params, const CameraFrame& frame, const PilotConfig& config = {});

/// Arrow from the bottom-center pixel, 0.4 * height * |throttle| long,
/// rotated from vertical by steering * 45 degrees, clipped to the frame.
MovementVector movement_vector(const ControlInput& input, const CameraModel& camera);

/// Anything that maps the current observation to a command. The state is
/// given for scripted controllers; learned drivers use only the frame.
using Driver = std::function<ControlInput(const CameraFrame& frame, const VehicleState& state)>;

Driver model_driver(const nn::ModelParams& params, const PilotConfig& config);

struct StopCondition {
  std::size_t max_steps = 600;
  bool stop_on_lap = true;
  bool stop_on_offtrack = false;
};

enum class Termination { MaxSteps, LapComplete, OffTrack };

std::string to_string(Termination reason);

struct TraceRow {
  std::uint64_t step = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  double steering = 0.0;
  double throttle = 0.0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Row k holds the state at t = k * dt and the command chosen from it.
struct EpisodeTrace {
  double dt_s = 0.05;
  std::vector<TraceRow> rows;
  Termination termination = Termination::MaxSteps;
};

struct SimSetup {
  const Track* track = nullptr;
  VehicleParams vehicle;
  CameraModel camera;
  PilotConfig pilot;
};

/// Fixed-step perceive, decide, act loop. Terminates once the state being
/// recorded has completed a lap or left the lane (per `stop`), or after
/// max_steps rows.
EpisodeTrace run_loop(const SimSetup& setup, const Driver& driver, const StopCondition& stop,
                      const VehicleState& start);

/// {"step","x","y","heading","speed","steering","throttle"} per line.
void write_trace_jsonl(const EpisodeTrace& trace, std::ostream& out);
void write_trace_jsonl(const EpisodeTrace& trace, const std::filesystem::path& path);
EpisodeTrace read_trace_jsonl(const std::filesystem::path& path, double dt_s);

}  // namespace pilot
