#include "pilotstack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "pilotstack/dataset.hpp"
#include "pilotstack/error.hpp"
#include "pilotstack/rng.hpp"

namespace pilot {

ControlInput expert_controller(const VehicleState& state, const Track& track, const VehicleParams& vehicle,
                               const ExpertConfig& config) {
  const Vec2 here{state.x_m, state.y_m};
  const Projection proj = track.project(here);
  if (std::abs(proj.lateral_offset_m) > 2.0 * track.spec().lane_width_m) {
    std::ostringstream msg;
    msg << "expert: vehicle is " << std::abs(proj.lateral_offset_m) << " m from the centerline";
    throw ExpertError(msg.str());
  }
  const Vec2 target = track.point_at(proj.arc_position_m + config.lookahead_m);
  const double dx = target.x - here.x;
  const double dy = target.y - here.y;
  const double c = std::cos(state.heading_rad);
  const double s = std::sin(state.heading_rad);
  const double forward = dx * c + dy * s;
  const double right = -dx * s + dy * c;  // positive heading change turns toward this side
  const double dist2 = forward * forward + right * right;
  const double curvature = dist2 > 1e-12 ? 2.0 * right / dist2 : 0.0;
  const double wheel_angle = std::atan(curvature * vehicle.wheelbase_m);
  const double steering = wheel_angle / vehicle.max_wheel_angle_rad;
  const double slowdown = config.curve_slowdown * std::min(1.0, std::abs(curvature));
  return {steering, config.cruise_throttle * (1.0 - slowdown)};
}

Driver expert_driver(const Track& track, const VehicleParams& vehicle, const ExpertConfig& config) {
  return [&track, vehicle, config](const CameraFrame&, const VehicleState& state) {
    return expert_controller(state, track, vehicle, config);
  };
}

VehicleState start_pose(const Track& track, double arc_m, double lateral_m, double heading_offset_rad) {
  const Vec2 p = track.point_at(arc_m);
  const double h = track.heading_at(arc_m);
  VehicleState state;
  state.x_m = p.x + lateral_m * std::sin(h);
  state.y_m = p.y - lateral_m * std::cos(h);
  state.heading_rad = wrap_angle(h + heading_offset_rad);
  return state;
}

LapMetrics score_episode(const EpisodeTrace& trace, const Track& track) {
  if (trace.rows.empty()) throw ValidationError("score_episode: empty trace");
  if (!(trace.dt_s > 0.0)) throw ValidationError("score_episode: dt must be > 0");
  LapMetrics m;
  const double length = track.length();
  const double half = track.half_width();
  ProgressTracker progress(track, {trace.rows.front().x, trace.rows.front().y});
  double prev = 0.0;
  bool off = false;
  std::size_t last = 0;
  for (std::size_t k = 0; k < trace.rows.size(); ++k) {
    const TraceRow& r = trace.rows[k];
    const Vec2 p{r.x, r.y};
    const double now = k == 0 ? 0.0 : progress.update(p);
    const double offset = std::abs(track.project(p).lateral_offset_m);
    m.max_lateral_offset_m = std::max(m.max_lateral_offset_m, offset);
    const bool is_off = offset > half;
    if (is_off && !off) ++m.offtrack_events;
    off = is_off;
    last = k;
    if (k > 0 && now >= length) {
      const double frac = (length - prev) / (now - prev);
      m.completed = true;
      m.lap_time_s = (static_cast<double>(k - 1) + frac) * trace.dt_s;
      m.distance_m = length;
      break;
    }
    prev = now;
  }
  if (!m.completed) {
    m.distance_m = prev;
    m.lap_time_s = static_cast<double>(last) * trace.dt_s;
  }
  m.avg_speed_mps = m.lap_time_s > 0.0 ? m.distance_m / m.lap_time_s : 0.0;
  return m;
}

nlohmann::ordered_json metrics_to_json(const LapMetrics& m) {
  return {{"completed", m.completed},
          {"lap_time_s", m.lap_time_s},
          {"distance_m", m.distance_m},
          {"avg_speed_mps", m.avg_speed_mps},
          {"offtrack_events", m.offtrack_events},
          {"max_lateral_offset_m", m.max_lateral_offset_m}};
}

std::string metrics_table(const LapMetrics& m) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "completed            %s\n"
                "lap_time_s           %.3f\n"
                "distance_m           %.3f\n"
                "avg_speed_mps        %.3f\n"
                "offtrack_events      %zu\n"
                "max_lateral_offset_m %.3f\n",
                m.completed ? "yes" : "no", m.lap_time_s, m.distance_m, m.avg_speed_mps, m.offtrack_events,
                m.max_lateral_offset_m);
  return buf;
}

namespace {

struct PendingRecord {
  CameraFrame frame;
  ControlInput label;
};

constexpr std::uint64_t kEpisodeStream = 0xE915'0DE0ULL;

}  // namespace

SynthReport synthesize_dataset(const Track& track, std::size_t n_samples, std::uint64_t seed,
                               const std::filesystem::path& out_dir, const SynthOptions& options, const LogFn& log) {
  if (n_samples < 1) throw ValidationError("synthesize_dataset: n_samples must be >= 1");
  if (!(options.noise_level >= 0.0 && options.noise_level <= 1.0)) {
    throw ValidationError("synthesize_dataset: noise_level must be in [0, 1]");
  }
  if (options.noise_hold_steps < 1) throw ValidationError("synthesize_dataset: noise_hold_steps must be >= 1");
  options.vehicle.validate();
  options.camera.validate();
  const double dt = 1.0 / options.record_rate_hz;
  if (!(dt > 0.0 && dt <= 0.1)) throw ValidationError("synthesize_dataset: record rate must be >= 10 Hz");

  SessionManifest manifest;
  manifest.image_width = options.camera.image_width_px;
  manifest.image_height = options.camera.image_height_px;
  manifest.record_rate_hz = options.record_rate_hz;
  manifest.track_id = options.track_id;
  manifest.created_utc = "1970-01-01T00:00:00Z";  // fixed so that a seed reproduces the session byte for byte
  SessionWriter writer(out_dir, manifest);

  SynthReport report;
  report.dir = out_dir;
  const auto period_ms = static_cast<std::int64_t>(std::llround(1000.0 * dt));
  std::int64_t clock_ms = 0;
  std::size_t consecutive_failures = 0;

  for (std::uint64_t episode = 0; writer.record_count() < n_samples; ++episode) {
    Rng rng(derive_seed(seed, kEpisodeStream + episode));
    const double arc = rng.uniform(0.0, track.length());
    const double lateral = rng.uniform(-options.start_lateral_m, options.start_lateral_m);
    const double yaw = rng.uniform(-options.start_heading_rad, options.start_heading_rad);
    VehicleState state = start_pose(track, arc, lateral, yaw);
    ProgressTracker progress(track, {state.x_m, state.y_m});

    std::vector<PendingRecord> pending;
    bool failed = false;
    double noise = 0.0;
    for (std::size_t k = 0; k < options.max_episode_steps; ++k) {
      if (!track.contains({state.x_m, state.y_m})) {
        failed = true;
        break;
      }
      const ControlInput label = expert_controller(state, track, options.vehicle, options.expert);
      if (k % options.noise_hold_steps == 0) noise = rng.uniform(-options.noise_level, options.noise_level);
      const ControlInput applied(label.steering() + noise, label.throttle());
      pending.push_back({render_camera_frame(track, state, options.camera), label});
      state = step(state, applied, options.vehicle, dt);
      if (progress.update({state.x_m, state.y_m}) >= track.length()) break;
    }

    if (failed) {
      ++report.failed_episodes;
      if (log) log("episode " + std::to_string(episode) + " left the lane; retrying with the next sub-seed");
      if (++consecutive_failures >= options.max_failed_episodes) {
        throw ExpertError("synthesize_dataset: " + std::to_string(consecutive_failures) +
                          " consecutive episodes left the lane");
      }
      continue;
    }
    consecutive_failures = 0;
    ++report.episodes;
    for (const auto& rec : pending) {
      if (writer.record_count() >= n_samples) break;
      writer.append(rec.frame, rec.label, clock_ms);
      clock_ms += period_ms;
    }
  }
  writer.close();
  report.records = writer.record_count();
  return report;
}

}  // namespace pilot
