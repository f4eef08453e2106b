#include "pilotstack/track.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "pilotstack/error.hpp"

namespace pilot {

namespace {

double cross(Vec2 o, Vec2 a, Vec2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// Closed-segment intersection, touching included.
bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int d1 = sign(cross(q1, q2, p1));
  const int d2 = sign(cross(q1, q2, p2));
  const int d3 = sign(cross(p1, p2, q1));
  const int d4 = sign(cross(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

}  // namespace

void validate_track(const TrackSpec& spec) {
  const auto& w = spec.waypoints;
  const std::size_t n = w.size();
  if (n < 4) throw ValidationError("track needs at least 4 waypoints");
  if (!(spec.lane_width_m > 0.0)) throw ValidationError("track lane_width_m must be > 0");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(w[i].x) || !std::isfinite(w[i].y)) {
      throw ValidationError("track waypoint " + std::to_string(i) + " is not finite");
    }
    if (w[i] == w[(i + 1) % n]) {
      throw ValidationError("track waypoints " + std::to_string(i) + " and " +
                            std::to_string((i + 1) % n) + " coincide");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = w[i];
    const Vec2 b = w[(i + 1) % n];
    // Adjacent segments share a vertex; they only conflict when they fold back
    // onto each other.
    const Vec2 c = w[(i + 2) % n];
    if (cross(a, b, c) == 0.0 &&
        (c.x - b.x) * (b.x - a.x) + (c.y - b.y) * (b.y - a.y) < 0.0) {
      throw ValidationError("track folds back on itself at waypoint " +
                            std::to_string((i + 1) % n));
    }
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent across the closure
      if (segments_intersect(a, b, w[j], w[(j + 1) % n])) {
        std::ostringstream msg;
        msg << "track centerline self-intersects (segments " << i << " and " << j << ")";
        throw ValidationError(msg.str());
      }
    }
  }
}

double centerline_length(const TrackSpec& spec) {
  const auto& w = spec.waypoints;
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Vec2 b = w[(i + 1) % w.size()];
    total += std::hypot(b.x - w[i].x, b.y - w[i].y);
  }
  return total;
}

Track::Track(TrackSpec spec) : spec_(std::move(spec)) {
  validate_track(spec_);
  const auto& w = spec_.waypoints;
  segments_.reserve(w.size());
  double arc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Vec2 a = w[i];
    const Vec2 b = w[(i + 1) % w.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    segments_.push_back({a, {(b.x - a.x) / len, (b.y - a.y) / len}, len, arc});
    arc += len;
  }
  length_ = arc;
  build_index();
}

Track::Hit Track::closest(const Segment& seg, Vec2 p) const {
  const double px = p.x - seg.a.x;
  const double py = p.y - seg.a.y;
  const double t = std::clamp(px * seg.dir.x + py * seg.dir.y, 0.0, seg.length);
  const double dx = px - seg.dir.x * t;
  const double dy = py - seg.dir.y * t;
  // Left of travel is the (dir.y, -dir.x) side: positive heading turns right.
  const double side = px * seg.dir.y - py * seg.dir.x;
  return {seg.arc_start + t, std::hypot(dx, dy), side};
}

Projection Track::project(Vec2 point) const {
  Hit best{0.0, std::numeric_limits<double>::infinity(), 0.0};
  // Strict comparison keeps the earliest segment on ties, i.e. the smallest arc.
  for (const auto& seg : segments_) {
    const Hit h = closest(seg, point);
    if (h.dist < best.dist) best = h;
  }
  double arc = best.arc;
  if (arc >= length_) arc -= length_;
  return {arc, best.side >= 0.0 ? best.dist : -best.dist};
}

bool Track::contains(Vec2 point) const {
  return std::abs(project(point).lateral_offset_m) <= half_width();
}

double Track::wrap_arc(double arc_m) const {
  double a = std::fmod(arc_m, length_);
  if (a < 0.0) a += length_;
  if (a >= length_) a = 0.0;
  return a;
}

std::size_t Track::segment_at(double arc_m) const {
  const double a = wrap_arc(arc_m);
  auto it = std::upper_bound(segments_.begin(), segments_.end(), a,
                             [](double v, const Segment& s) { return v < s.arc_start; });
  return static_cast<std::size_t>(std::distance(segments_.begin(), it)) - 1;
}

Vec2 Track::point_at(double arc_m) const {
  const double a = wrap_arc(arc_m);
  const Segment& seg = segments_[segment_at(a)];
  const double t = std::min(a - seg.arc_start, seg.length);
  return {seg.a.x + seg.dir.x * t, seg.a.y + seg.dir.y * t};
}

double Track::heading_at(double arc_m) const {
  const Segment& seg = segments_[segment_at(arc_m)];
  return std::atan2(seg.dir.y, seg.dir.x);
}

void Track::build_index() {
  const double hw = half_width();
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const auto& p : spec_.waypoints) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  cell_ = std::max(0.25, hw);
  grid_origin_ = {min_x - hw - cell_, min_y - hw - cell_};
  grid_cols_ = static_cast<std::size_t>(std::ceil((max_x - min_x + 2 * (hw + cell_)) / cell_)) + 1;
  grid_rows_ = static_cast<std::size_t>(std::ceil((max_y - min_y + 2 * (hw + cell_)) / cell_)) + 1;

  auto cell_range = [&](const Segment& s) {
    const Vec2 b{s.a.x + s.dir.x * s.length, s.a.y + s.dir.y * s.length};
    const auto c0 = static_cast<std::size_t>((std::min(s.a.x, b.x) - hw - grid_origin_.x) / cell_);
    const auto c1 = static_cast<std::size_t>((std::max(s.a.x, b.x) + hw - grid_origin_.x) / cell_);
    const auto r0 = static_cast<std::size_t>((std::min(s.a.y, b.y) - hw - grid_origin_.y) / cell_);
    const auto r1 = static_cast<std::size_t>((std::max(s.a.y, b.y) + hw - grid_origin_.y) / cell_);
    return std::array<std::size_t, 4>{c0, std::min(c1, grid_cols_ - 1), r0,
                                      std::min(r1, grid_rows_ - 1)};
  };

  std::vector<std::uint32_t> counts(grid_cols_ * grid_rows_ + 1, 0);
  for (const auto& s : segments_) {
    const auto [c0, c1, r0, r1] = cell_range(s);
    for (std::size_t r = r0; r <= r1; ++r)
      for (std::size_t c = c0; c <= c1; ++c) ++counts[r * grid_cols_ + c + 1];
  }
  for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
  cell_offsets_ = counts;
  cell_segments_.assign(counts.back(), 0);
  std::vector<std::uint32_t> fill(counts.begin(), counts.end() - 1);
  for (std::uint32_t idx = 0; idx < segments_.size(); ++idx) {
    const auto [c0, c1, r0, r1] = cell_range(segments_[idx]);
    for (std::size_t r = r0; r <= r1; ++r)
      for (std::size_t c = c0; c <= c1; ++c) cell_segments_[fill[r * grid_cols_ + c]++] = idx;
  }
}

double Track::near_distance(Vec2 point) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double fx = (point.x - grid_origin_.x) / cell_;
  const double fy = (point.y - grid_origin_.y) / cell_;
  if (!(fx >= 0.0 && fy >= 0.0 && fx < static_cast<double>(grid_cols_) &&
        fy < static_cast<double>(grid_rows_))) {
    return inf;
  }
  const auto c = static_cast<std::size_t>(fx);
  const auto r = static_cast<std::size_t>(fy);
  const std::size_t cell = r * grid_cols_ + c;
  double best = inf;
  for (std::uint32_t k = cell_offsets_[cell]; k < cell_offsets_[cell + 1]; ++k) {
    best = std::min(best, closest(segments_[cell_segments_[k]], point).dist);
  }
  return best <= half_width() ? best : inf;
}

Rgb Track::surface_color(Vec2 point) const {
  const double d = near_distance(point);
  const double hw = half_width();
  if (d <= hw - kLineBandM) return spec_.colors.track;
  if (d <= hw) return spec_.colors.line;
  return spec_.colors.offtrack;
}

Projection project_to_centerline(const Track& track, Vec2 point) { return track.project(point); }

bool is_on_track(const Track& track, Vec2 point) { return track.contains(point); }

TrackSpec default_track() {
  constexpr double kLength = 13.0;
  constexpr double kRadius = 1.0;
  constexpr std::size_t kPoints = 130;
  constexpr double pi = std::numbers::pi;
  const double straight = (kLength - 2.0 * pi * kRadius) / 2.0;
  const double half = straight / 2.0;

  auto at = [&](double s) -> Vec2 {
    if (s < half) return {s, -kRadius};
    s -= half;
    if (s < pi * kRadius) {
      const double phi = s / kRadius;
      return {half + kRadius * std::sin(phi), -kRadius * std::cos(phi)};
    }
    s -= pi * kRadius;
    if (s < straight) return {half - s, kRadius};
    s -= straight;
    if (s < pi * kRadius) {
      const double phi = s / kRadius;
      return {-half - kRadius * std::sin(phi), kRadius * std::cos(phi)};
    }
    s -= pi * kRadius;
    return {-half + s, -kRadius};
  };

  TrackSpec spec;
  spec.lane_width_m = 0.6;
  spec.waypoints.reserve(kPoints);
  for (std::size_t i = 0; i < kPoints; ++i) {
    spec.waypoints.push_back(at(kLength * static_cast<double>(i) / kPoints));
  }
  return spec;
}

ProgressTracker::ProgressTracker(const Track& track, Vec2 start)
    : track_(&track), last_arc_(track.project(start).arc_position_m) {}

double ProgressTracker::update(Vec2 point) {
  const double arc = track_->project(point).arc_position_m;
  const double length = track_->length();
  double delta = arc - last_arc_;
  if (delta > length / 2.0) delta -= length;
  if (delta < -length / 2.0) delta += length;
  progress_ += delta;
  last_arc_ = arc;
  return progress_;
}

void to_json(nlohmann::json& j, const Rgb& c) { j = nlohmann::json::array({c.r, c.g, c.b}); }

void from_json(const nlohmann::json& j, Rgb& c) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("color must be [r, g, b]");
  auto channel = [](const nlohmann::json& v) {
    const int x = v.get<int>();
    if (x < 0 || x > 255) throw ValidationError("color channel out of 0..255");
    return static_cast<std::uint8_t>(x);
  };
  c = {channel(j[0]), channel(j[1]), channel(j[2])};
}

void to_json(nlohmann::json& j, const TrackSpec& spec) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : spec.waypoints) points.push_back({p.x, p.y});
  j = {{"lane_width_m", spec.lane_width_m},
       {"waypoints", points},
       {"colors",
        {{"track", spec.colors.track},
         {"line", spec.colors.line},
         {"offtrack", spec.colors.offtrack},
         {"sky", spec.colors.sky}}}};
}

void from_json(const nlohmann::json& j, TrackSpec& spec) {
  spec = TrackSpec{};
  spec.lane_width_m = j.at("lane_width_m").get<double>();
  for (const auto& p : j.at("waypoints")) {
    if (!p.is_array() || p.size() != 2) throw ValidationError("waypoint must be [x, y]");
    spec.waypoints.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  if (j.contains("colors")) {
    const auto& c = j.at("colors");
    for (const auto& [key, value] : c.items()) {
      if (key == "track") spec.colors.track = value.get<Rgb>();
      else if (key == "line") spec.colors.line = value.get<Rgb>();
      else if (key == "offtrack") spec.colors.offtrack = value.get<Rgb>();
      else if (key == "sky") spec.colors.sky = value.get<Rgb>();
      else throw ValidationError("unknown track color key: " + key);
    }
  }
}

TrackSpec load_track_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open track file " + path.string());
  TrackSpec spec;
  try {
    spec = nlohmann::json::parse(in).get<TrackSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid track file " + path.string() + ": " + e.what());
  }
  validate_track(spec);
  return spec;
}

void save_track_spec(const TrackSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write track file " + path.string());
  out << nlohmann::json(spec).dump(2) << '\n';
}

}  // namespace pilot
