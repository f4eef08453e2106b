#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pilot {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct TrackColors {
  Rgb track{96, 96, 96};
  Rgb line{255, 255, 255};
  Rgb offtrack{40, 120, 40};
  Rgb sky{150, 200, 255};
};

/// Width of the painted band just inside each lane edge.
inline constexpr double kLineBandM = 0.02;

/// Raw, unvalidated track description (what the JSON file holds).
struct TrackSpec {
  std::vector<Vec2> waypoints;  // closed loop; last connects back to first
  double lane_width_m = 0.6;
  TrackColors colors;
};

struct Projection {
  double arc_position_m = 0.0;    // in [0, length)
  double lateral_offset_m = 0.0;  // signed, left of travel direction positive
};

/// Validated track with cached segment geometry and a uniform-grid index
/// used by the renderer for O(1) surface lookups.
class Track {
 public:
  /// Throws ValidationError if the waypoints or lane width break a track invariant.
  explicit Track(TrackSpec spec);

  const TrackSpec& spec() const { return spec_; }
  double length() const { return length_; }
  double half_width() const { return spec_.lane_width_m / 2.0; }
  std::size_t segment_count() const { return segments_.size(); }

  Projection project(Vec2 point) const;
  bool contains(Vec2 point) const;

  /// Centerline point and travel direction (radians) at an arc position;
  /// the arc is taken modulo the track length.
  Vec2 point_at(double arc_m) const;
  double heading_at(double arc_m) const;

  /// Unsigned distance to the centerline if it is <= half_width(), else +inf.
  /// Agrees exactly with |project(point).lateral_offset_m| in that range.
  double near_distance(Vec2 point) const;

  /// Surface color at a ground point.
  Rgb surface_color(Vec2 point) const;

 private:
  struct Segment {
    Vec2 a;
    Vec2 dir;  // unit
    double length = 0.0;
    double arc_start = 0.0;
  };
  struct Hit {
    double arc = 0.0;
    double dist = 0.0;
    double side = 0.0;
  };
  Hit closest(const Segment& seg, Vec2 p) const;
  double wrap_arc(double arc_m) const;
  std::size_t segment_at(double arc_m) const;
  void build_index();

  TrackSpec spec_;
  std::vector<Segment> segments_;
  double length_ = 0.0;

  double cell_ = 0.25;
  Vec2 grid_origin_;
  std::size_t grid_cols_ = 0;
  std::size_t grid_rows_ = 0;
  std::vector<std::uint32_t> cell_offsets_;
  std::vector<std::uint32_t> cell_segments_;
};

/// Checks the TrackSpec invariants; throws ValidationError naming the first
/// violation.
void validate_track(const TrackSpec& spec);

/// Perimeter of the closed polyline.
double centerline_length(const TrackSpec& spec);

Projection project_to_centerline(const Track& track, Vec2 point);
bool is_on_track(const Track& track, Vec2 point);

/// The shipped course: an oval with two straights and two 180-degree arcs of
/// 1.0 m radius, 13.0 m around, 0.6 m lane.
TrackSpec default_track();

/// Unwraps arc positions across the start line into cumulative progress.
class ProgressTracker {
 public:
  ProgressTracker(const Track& track, Vec2 start);

  /// Feeds the next position; returns cumulative progress in meters.
  double update(Vec2 point);
  double progress() const { return progress_; }
  double last_arc() const { return last_arc_; }

 private:
  const Track* track_;
  double last_arc_;
  double progress_ = 0.0;
};

void to_json(nlohmann::json& j, const Rgb& c);
void from_json(const nlohmann::json& j, Rgb& c);
void to_json(nlohmann::json& j, const TrackSpec& spec);
void from_json(const nlohmann::json& j, TrackSpec& spec);

TrackSpec load_track_spec(const std::filesystem::path& path);
void save_track_spec(const TrackSpec& spec, const std::filesystem::path& path);

}  // namespace pilot
