#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vplan/geometry.hpp"
#include "vplan/scene.hpp"

namespace vplan {

struct ControlCommand {
  double steer = 0.0;     // [-1, 1]
  double throttle = 0.0;  // [0, 1]
  double brake = 0.0;     // [0, 1]

  // Clamps ranges and enforces throttle/brake mutual exclusion (brake wins).
  static ControlCommand clamped(double steer, double throttle, double brake);

  ControlRecord record() const { return {steer, throttle, brake}; }
};

struct BicycleParams {
  double wheelbase = 2.8;                  // m
  double a_max = 3.0;                      // m/s^2 at full throttle
  double b_max = 6.0;                      // m/s^2 at full brake
  double delta_max = 35.0 * M_PI / 180.0;  // max front-wheel angle, rad
  double drag = 0.003;                     // quadratic drag, 1/m
};

struct EgoState {
  Pose2 pose;          // world frame
  double speed = 0.0;  // m/s, >= 0
  double wheelbase = 2.8;
};

// Kinematic bicycle integration step. dt must be in (0, 0.1].
EgoState bicycle_step(const EgoState& s, const ControlCommand& c, double dt,
                      const BicycleParams& p = {});

struct PidGains {
  double kp_speed = 0.7;
  double ki_speed = 0.25;
  double kd_speed = 0.0;
  double kp_heading = 2.0;
  double ki_heading = 0.0;
  double kd_heading = 0.35;
  double k_lookahead = 0.6;  // lookahead = clamp(k_lookahead * v, 2 m, 6 m)
};

struct PidState {
  double i_speed = 0.0;
  double prev_speed_err = 0.0;
  double i_heading = 0.0;
  double prev_heading_err = 0.0;
  bool primed = false;
};

// Tracks a plan expressed in the CURRENT ego frame: steer from PID on the
// heading error toward a lookahead waypoint, throttle/brake from PID on the
// error against the mean waypoint speed over the plan's first second.
ControlCommand pid_control(const EgoState& s, const Trajectory& plan_ego, PidState& st, double dt,
                           const PidGains& g = {}, double dt_wp = 0.5);

// ---- infractions and scoring ----

enum class InfractionKind : uint8_t {
  collision_vehicle = 0,
  collision_static = 1,
  red_light = 2,
  stop_sign = 3,
  offroad = 4,
};

const char* infraction_kind_name(InfractionKind k);

struct InfractionEvent {
  InfractionKind kind;
  int object_id = -1;  // agent id, traffic element index, or boundary index
  int tick = 0;
  double t = 0.0;
};

// Penalty coefficients by infraction kind name. Offroad never multiplies the
// infraction score; it withholds route-completion credit instead.
struct PenaltyConfig {
  std::vector<std::pair<std::string, double>> coefficients = {
      {"collision_vehicle", 0.60},
      {"collision_static", 0.65},
      {"red_light", 0.70},
      {"stop_sign", 0.80},
  };

  double coefficient(InfractionKind k) const;
};

struct AgentTickState {
  int id = 0;
  Pose2 pose;  // world frame
  double speed = 0.0;
};

struct TickRecord {
  int tick = 0;
  double t = 0.0;
  Pose2 ego_pose;  // world frame
  double ego_speed = 0.0;
  ControlCommand control;
  int argmax_index = -1;               // planner policies only
  std::vector<int> topk_indices;       // top-K policy only
  std::vector<AgentTickState> agents;
  std::vector<InfractionEvent> events;  // events raised at this tick
};

struct EpisodeResult {
  std::vector<TickRecord> trace;
  std::vector<InfractionEvent> events;
  double route_completion = 0.0;  // [0, 100]
  double infraction_score = 1.0;  // [0, 1]
  double driving_score = 0.0;     // [0, 100], = RC * IS
  bool route_done = false;
  int warning_frames = 0;  // set by collection when expert frames are dropped
};

// ---- policies ----

class Policy {
 public:
  virtual ~Policy() = default;
  // Called at every replan tick; returns the T-waypoint plan in the ego frame.
  // Learned policies read only the snapshot; the expert also uses the world
  // state and clock to forward-simulate itself.
  virtual Trajectory plan(const SceneSnapshot& snap, const EgoState& ego, double t) = 0;
  // Direct per-tick control. Policies returning nullopt are PID-tracked.
  virtual std::optional<ControlCommand> control(const EgoState& ego, double t, double dt) {
    (void)ego;
    (void)t;
    (void)dt;
    return std::nullopt;
  }
  // Trace annotations for the replay stream.
  virtual int argmax_index() const { return -1; }
  virtual std::vector<int> topk_indices() const { return {}; }
};

struct SimConfig {
  double dt = 0.05;            // 20 Hz inner loop
  double replan_period = 0.5;  // 2 Hz replanning
  int horizon = 6;
  double dt_wp = 0.5;
  Footprint ego_footprint;
  BicycleParams bicycle;
  PidGains pid;
  PenaltyConfig penalties;
  double agent_radius = 80.0;  // snapshot visibility, m
  double map_radius = 60.0;    // snapshot map crop, m
};

// Deterministic start-state jitter for demonstration diversity. seed 0 is the
// identity; other seeds perturb ego start speed, lateral offset, and scripted
// agent speeds reproducibly.
ScenarioSpec jitter_scenario(const ScenarioSpec& s, uint32_t seed);

// Scripted agent state at absolute episode time, closed form in t.
class AgentRuntime {
 public:
  AgentRuntime(int id, const AgentSpec& spec);

  int id() const { return id_; }
  const Footprint& footprint() const { return spec_.footprint; }
  Pose2 pose_at(double t) const;
  double speed_at(double t) const;
  // World-frame poses at t + dt_wp, ..., t + T*dt_wp.
  PoseTrack future_world(double t, int T, double dt_wp) const;

 private:
  int id_;
  AgentSpec spec_;
  std::vector<double> cum_;  // arclength table for lane_follow
  double start_s_ = 0.0;
};

// World clock plus the mutable pieces of episode state that observations need
// (route progress, stop-sign satisfaction, traffic light phases).
class World {
 public:
  World(const ScenarioSpec& scenario, const SimConfig& cfg);

  const ScenarioSpec& scenario() const { return scenario_; }
  const std::vector<AgentRuntime>& agents() const { return agents_; }

  LightState light_state(int element, double t) const;
  double route_length() const { return route_total_; }
  double route_progress() const { return progress_; }
  const std::vector<char>& stop_satisfied() const { return stop_satisfied_; }

  // Arclength of the closest route point to a world position.
  double route_project(const Vec2& pos) const;
  // World-frame point and tangent heading at a route arclength (clamped).
  Pose2 route_pose_at(double s) const;
  // Arclength where an element's stop line crosses the route, or -1.
  double element_route_s(int element) const;

  // Explicit-state form shared with expert rollouts: an element affects the
  // ego while its stop line lies ahead of `progress` and (stop signs) is not
  // yet satisfied.
  bool element_affects(int element, double progress, const std::vector<char>& satisfied) const;
  bool element_affects_ego(int element) const {
    return element_affects(element, progress_, stop_satisfied_);
  }
  // Marks stop signs satisfied when the ego is stopped close before the line.
  void advance_stop_state(const EgoState& ego, double progress,
                          std::vector<char>& satisfied) const;

  // Per-tick bookkeeping: advances progress (crediting only on-road motion),
  // stop-sign satisfaction, and offroad parity.
  void observe_ego(const EgoState& ego, double t);
  bool ego_offroad() const { return offroad_; }
  double credited_progress() const { return credited_; }
  bool route_done() const;

  SceneSnapshot make_snapshot(const EgoState& ego, const ControlCommand& last, double yaw_rate,
                              double t) const;

 private:
  ScenarioSpec scenario_;
  SimConfig cfg_;
  std::vector<AgentRuntime> agents_;
  std::vector<double> route_cum_;
  double route_total_ = 0.0;
  std::vector<double> element_route_s_;  // stop-line crossing arclength, or -1
  std::vector<char> stop_satisfied_;
  double progress_ = 0.0;
  double credited_ = 0.0;
  bool offroad_ = false;
  Vec2 prev_center_;
  bool has_prev_center_ = false;
};

// Closed-loop episode. Raises NumericError naming the tick if the ego state
// stops being finite. Deterministic: no hidden randomness.
EpisodeResult simulate_episode(const ScenarioSpec& scenario, Policy& policy,
                               const SimConfig& cfg);

// Post-run scoring. fraction is credited route fraction in [0, 1]. The
// driving score is the product of route completion (percent) and the
// infraction score (fraction in [0, 1]). Offroad events carry no coefficient:
// their cost is the route credit withheld while off the road.
struct EpisodeScore {
  double route_completion = 0.0;
  double infraction_score = 1.0;
  double driving_score = 0.0;
};

EpisodeScore score_episode(std::span<const InfractionEvent> events, double fraction,
                           const PenaltyConfig& penalties);

// Replay stream: one JSON object per line, one line per tick.
void write_replay(const std::string& path, const EpisodeResult& r);

}  // namespace vplan
