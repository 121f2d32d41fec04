#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vplan/geometry.hpp"
#include "vplan/model.hpp"

namespace vplan {

enum class TrafficKind : uint8_t { traffic_light = 0, stop_sign = 1 };
enum class LightState : uint8_t { red = 0, yellow = 1, green = 2, na = 3 };
enum class NaviCommand : uint8_t {
  follow = 0,
  left = 1,
  right = 2,
  straight = 3,
  change_left = 4,
  change_right = 5,
};

const char* traffic_kind_name(TrafficKind k);
TrafficKind traffic_kind_from_name(const std::string& s);
const char* light_state_name(LightState s);
LightState light_state_from_name(const std::string& s);
const char* navi_command_name(NaviCommand c);

struct ControlRecord {
  double steer = 0.0;     // [-1, 1]
  double throttle = 0.0;  // [0, 1]
  double brake = 0.0;     // [0, 1]
};

// ---- observation side (ego frame) ----

struct AgentObs {
  int id = 0;
  Pose2 pose;
  Footprint footprint;
  double speed = 0.0;
  PoseTrack future;  // T poses on the waypoint grid
};

struct TrafficElementObs {
  TrafficKind kind = TrafficKind::stop_sign;
  LightState state = LightState::na;
  bool affects_ego = false;
  Vec2 stop_a, stop_b;  // stop-line segment
};

struct EgoStatus {
  double speed = 0.0;
  double yaw_rate = 0.0;
  ControlRecord last_control;
};

struct NaviInfo {
  NaviCommand command = NaviCommand::follow;
  Vec2 target;  // ego frame
};

// Everything the planner observes at one tick, in the current ego frame.
struct SceneSnapshot {
  std::vector<Polyline> map;
  std::vector<AgentObs> agents;
  std::vector<TrafficElementObs> traffic_elements;
  EgoStatus ego;
  NaviInfo navigation;

  // Checks the boundary-present invariant, finiteness, and (when
  // expected_horizon >= 0) that agent futures share the waypoint grid.
  void validate(int expected_horizon = -1) const;
};

// ---- scenario side (world frame) ----

enum class BehaviorKind : uint8_t {
  stationary = 0,
  constant_speed = 1,
  lane_follow = 2,
  scripted_waypoints = 3,
};

const char* behavior_kind_name(BehaviorKind k);

struct AgentBehavior {
  BehaviorKind kind = BehaviorKind::stationary;
  double speed = 0.0;           // constant_speed, lane_follow
  std::vector<Vec2> path;       // lane_follow polyline
  double sample_dt = 0.0;       // scripted_waypoints
  std::vector<Vec2> points;     // scripted_waypoints, world frame
};

struct AgentSpec {
  Pose2 start;
  Footprint footprint;
  AgentBehavior behavior;
};

struct TrafficPhase {
  LightState state = LightState::green;
  double seconds = 0.0;
};

struct TrafficElementSpec {
  TrafficKind kind = TrafficKind::stop_sign;
  Vec2 stop_a, stop_b;
  std::vector<TrafficPhase> program;  // traffic lights only; cycles
};

struct ScenarioSpec {
  std::vector<Polyline> map;
  std::vector<Vec2> route;  // ordered centerline points, world frame
  std::vector<AgentSpec> agents;
  std::vector<TrafficElementSpec> traffic_elements;
  Pose2 ego_start;
  double ego_start_speed = 0.0;
  double episode_seconds = 0.0;

  void validate() const;
};

// JSON round trip. Unknown keys are rejected with the offending key named.
// See docs/scenario_schema.md for the exact field layout.
ScenarioSpec load_scenario(const std::string& path);
void save_scenario(const std::string& path, const ScenarioSpec& s);

// Arclength-uniform resampling to n points including both endpoints.
std::vector<Vec2> resample_polyline(const Polyline& p, int n);

// Fixed-layout feature rows for the embedding MLPs. Agents are capped at
// kMaxAgents nearest-first; traffic elements at kMaxTrafficElements in input
// order.
SceneFeatures<double> extract_features(const SceneSnapshot& s);

// Value-level embedding at the training dtype.
struct EnvTokenSet {
  ad::Tensor<float> env;    // (M, d)
  ad::Tensor<float> navi;   // (1, d)
  ad::Tensor<float> state;  // (1, d)
};

EnvTokenSet embed_scene(const SceneSnapshot& s, ad::ParamStore<float>& params,
                        const AblationFlags& ab = {});

}  // namespace vplan
