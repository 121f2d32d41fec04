#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vplan/errors.hpp"

namespace vplan {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }

  bool operator==(const Vec2& o) const = default;
};

// Wraps an angle into (-pi, pi].
double normalize_angle(double rad);

struct Pose2 {
  Vec2 pos;
  double heading = 0.0;  // radians in (-pi, pi]

  // Maps a point from this pose's local frame (x forward, y left) to the parent frame.
  Vec2 to_world(const Vec2& local) const;
  // Maps a parent-frame point into this pose's local frame.
  Vec2 to_local(const Vec2& world) const;
};

struct Footprint {
  double length = 4.6;  // m, along heading
  double width = 1.9;   // m, across heading
};

enum class PolylineKind : uint8_t {
  lane_centerline = 0,
  lane_divider = 1,
  road_boundary = 2,
  pedestrian_crossing = 3,
};

const char* polyline_kind_name(PolylineKind k);
PolylineKind polyline_kind_from_name(const std::string& name);

struct Polyline {
  PolylineKind kind = PolylineKind::road_boundary;
  std::vector<Vec2> points;  // >= 2, consecutive points distinct

  void validate() const;
  double length() const;
};

// A T-step waypoint sequence in the ego frame at the current tick.
// Timestamps are implicit: waypoint k (0-based) is at (k+1)*dt_wp seconds.
struct Trajectory {
  std::vector<Vec2> waypoints;

  int horizon() const { return static_cast<int>(waypoints.size()); }
  void validate(int expected_horizon = -1) const;
};

// A waypoint sequence with explicit headings, on the same time grid as Trajectory.
struct PoseTrack {
  std::vector<Pose2> poses;

  int horizon() const { return static_cast<int>(poses.size()); }
};

// Average per-waypoint Euclidean distance (ADE). Throws ShapeError on horizon mismatch.
double traj_distance(const Trajectory& a, const Trajectory& b);

// Headings derived from incoming displacements: waypoint 0 from the implicit
// (0,0) start. Steps shorter than 1 cm inherit the previous heading; a
// degenerate first step defaults to 0.
std::vector<double> trajectory_headings(const Trajectory& t);

// Attaches derived headings to a trajectory's waypoints.
PoseTrack with_derived_headings(const Trajectory& t);

// Oriented-rectangle intersection via the separating-axis test. Touching
// counts as overlap; `inflation` grows both rectangles by that margin (m).
bool footprints_overlap(const Pose2& p1, const Footprint& f1, const Pose2& p2,
                        const Footprint& f2, double inflation = 0.0);

// Signed SAT margin: positive when overlapping (smallest per-axis overlap),
// negative when separated (largest per-axis gap). Used by test oracles to
// skip near-tangent configurations.
double footprint_overlap_margin(const Pose2& p1, const Footprint& f1, const Pose2& p2,
                                const Footprint& f2);

bool rect_intersects_segment(const Pose2& pose, const Footprint& fp, const Vec2& a,
                             const Vec2& b, double inflation = 0.0);

// True iff the ego and agent footprints overlap at any shared waypoint index
// or at the midpoint of any shared segment between consecutive waypoints.
bool conflict_with_agent(const Trajectory& ego, const Footprint& ego_fp,
                         const PoseTrack& agent_future, const Footprint& agent_fp,
                         double inflation = 0.0);

// True iff the ego footprint posed at any waypoint intersects any boundary segment.
// Only polylines of kind road_boundary participate.
bool conflict_with_boundary(const Trajectory& ego, const Footprint& ego_fp,
                            std::span<const Polyline> boundaries, double inflation = 0.0);

}  // namespace vplan
