#include "pilotstack/autopilot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "pilotstack/error.hpp"

namespace pilot {

void PilotConfig::validate() const {
  if (!(loop_rate_hz > 0.0) || !std::isfinite(loop_rate_hz)) throw ValidationError("pilot.loop_rate_hz must be > 0");
  if (1.0 / loop_rate_hz > 0.1) throw ValidationError("pilot.loop_rate_hz must be >= 10 (simulation step <= 0.1 s)");
  if (!(throttle_scale > 0.0 && throttle_scale <= 1.0)) throw ValidationError("pilot.throttle_scale must be in (0, 1]");
  if (!(steering_trim >= -0.2 && steering_trim <= 0.2)) throw ValidationError("pilot.steering_trim must be in [-0.2, 0.2]");
}

nn::Tensor preprocess(const CameraFrame& frame, std::size_t height, std::size_t width) {
  if (frame.empty()) throw ValidationError("preprocess: frame has a zero dimension");
  if (height == 0 || width == 0) throw ValidationError("preprocess: target size has a zero dimension");
  nn::Tensor out({height, width, 3});
  const auto& px = frame.pixels();
  if (frame.width() == width && frame.height() == height) {
    for (std::size_t i = 0; i < px.size(); ++i) out[i] = static_cast<float>(px[i]) / 255.0f;
    return out;
  }
  const std::size_t sw = frame.width();
  const std::size_t sh = frame.height();
  const double ry = height > 1 ? static_cast<double>(sh - 1) / static_cast<double>(height - 1) : 0.0;
  const double rx = width > 1 ? static_cast<double>(sw - 1) / static_cast<double>(width - 1) : 0.0;
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = static_cast<double>(y) * ry;
    const auto y0 = std::min(static_cast<std::size_t>(fy), sh - 1);
    const std::size_t y1 = std::min(y0 + 1, sh - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = static_cast<double>(x) * rx;
      const auto x0 = std::min(static_cast<std::size_t>(fx), sw - 1);
      const std::size_t x1 = std::min(x0 + 1, sw - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        auto p = [&](std::size_t yy, std::size_t xx) { return static_cast<double>(px[(yy * sw + xx) * 3 + c]); };
        const double top = p(y0, x0) + (p(y0, x1) - p(y0, x0)) * wx;
        const double bottom = p(y1, x0) + (p(y1, x1) - p(y1, x0)) * wx;
        const double v = top + (bottom - top) * wy;
        out[(y * width + x) * 3 + c] = static_cast<float>(v) / 255.0f;
      }
    }
  }
  return out;
}

HeadOutputs infer_heads(const nn::ModelParams& params, const CameraFrame& frame) {
  const nn::InputLayer& in = params.arch.input();
  nn::Tensor x = preprocess(frame, in.height, in.width);
  x.reshape({1, in.height, in.width, 3});
  const auto fwd = nn::model_forward(params, x, nn::Mode::Infer);
  return {fwd.steering[0], fwd.throttle[0]};
}

ControlInput heads_to_control(const HeadOutputs& heads, const PilotConfig& config) {
  const double steering = clamp_unit(clamp_unit(heads.steering) + config.steering_trim);
  const double throttle = clamp_unit(heads.throttle) * config.throttle_scale;
  return {steering, throttle};
}

ControlInput predict(const nn::ModelParams& params, const CameraFrame& frame, const PilotConfig& config) {
  return heads_to_control(infer_heads(params, frame), config);
}

MovementVector movement_vector(const ControlInput& input, const CameraModel& camera) {
  const double w = static_cast<double>(camera.image_width_px);
  const double h = static_cast<double>(camera.image_height_px);
  const PixelPoint origin{std::floor(w / 2.0), h - 1.0};
  const double length = kMovementVectorLengthFraction * h * std::abs(input.throttle());
  const double angle = input.steering() * kMovementVectorSweepRad;
  double dx = length * std::sin(angle);
  double dy = -length * std::cos(angle);

  // Shrink along the ray until the endpoint is inside [0, w-1] x [0, h-1].
  double t = 1.0;
  if (origin.x + dx > w - 1.0) t = std::min(t, (w - 1.0 - origin.x) / dx);
  if (origin.x + dx < 0.0) t = std::min(t, -origin.x / dx);
  if (origin.y + dy < 0.0) t = std::min(t, -origin.y / dy);
  dx *= t;
  dy *= t;
  PixelPoint end{std::clamp(origin.x + dx, 0.0, w - 1.0), std::clamp(origin.y + dy, 0.0, h - 1.0)};
  return {origin, end};
}

Driver model_driver(const nn::ModelParams& params, const PilotConfig& config) {
  return [params, config](const CameraFrame& frame, const VehicleState&) { return predict(params, frame, config); };
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::MaxSteps: return "max_steps";
    case Termination::LapComplete: return "lap_complete";
    case Termination::OffTrack: return "off_track";
  }
  return "unknown";
}

EpisodeTrace run_loop(const SimSetup& setup, const Driver& driver, const StopCondition& stop,
                      const VehicleState& start) {
  if (setup.track == nullptr) throw ValidationError("run_loop needs a track");
  setup.pilot.validate();
  const Track& track = *setup.track;
  const double dt = setup.pilot.dt_s();

  EpisodeTrace trace;
  trace.dt_s = dt;
  trace.rows.reserve(stop.max_steps);
  ProgressTracker progress(track, {start.x_m, start.y_m});
  VehicleState state = start;
  for (std::uint64_t k = 0; k < stop.max_steps; ++k) {
    if (k > 0) progress.update({state.x_m, state.y_m});
    const CameraFrame frame = render_camera_frame(track, state, setup.camera);
    const ControlInput input = driver(frame, state);
    trace.rows.push_back(
        {k, state.x_m, state.y_m, state.heading_rad, state.speed_mps, input.steering(), input.throttle()});
    if (stop.stop_on_lap && progress.progress() >= track.length()) {
      trace.termination = Termination::LapComplete;
      return trace;
    }
    if (stop.stop_on_offtrack && !track.contains({state.x_m, state.y_m})) {
      trace.termination = Termination::OffTrack;
      return trace;
    }
    state = step(state, input, setup.vehicle, dt);
  }
  trace.termination = Termination::MaxSteps;
  return trace;
}

void write_trace_jsonl(const EpisodeTrace& trace, std::ostream& out) {
  for (const auto& r : trace.rows) {
    const nlohmann::ordered_json j = {{"step", r.step},       {"x", r.x},
                                      {"y", r.y},             {"heading", r.heading},
                                      {"speed", r.speed},     {"steering", r.steering},
                                      {"throttle", r.throttle}};
    out << j.dump() << '\n';
  }
}

void write_trace_jsonl(const EpisodeTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_trace_jsonl(trace, out);
  if (!out) throw DataError("failed writing " + path.string());
}

EpisodeTrace read_trace_jsonl(const std::filesystem::path& path, double dt_s) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace " + path.string());
  EpisodeTrace trace;
  trace.dt_s = dt_s;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      trace.rows.push_back({j.at("step").get<std::uint64_t>(), j.at("x").get<double>(), j.at("y").get<double>(),
                            j.at("heading").get<double>(), j.at("speed").get<double>(),
                            j.at("steering").get<double>(), j.at("throttle").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed trace line " + std::to_string(line_no) + " in " + path.string() + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace pilot
