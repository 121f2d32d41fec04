#pragma once

#include "vplan/sim.hpp"

namespace vplan {

// Rule-based demonstration driver: pure-pursuit lateral tracking of the route
// plus IDM-style longitudinal control with a time-headway gap to the lead
// agent and hard stops for affecting red lights and stop signs.
struct ExpertParams {
  double desired_speed = 8.0;     // m/s
  double idm_accel = 1.8;         // m/s^2, IDM a
  double comfort_brake = 2.8;     // m/s^2, IDM b
  double time_headway = 1.4;      // s
  double min_gap = 3.5;           // m, bumper to bumper at rest
  double idm_delta = 4.0;         // speed exponent
  // Center-to-line stop distance; must exceed half the ego length so the
  // stopped footprint never touches the line.
  double stop_line_margin = 3.0;
  // Pure-pursuit corner cut grows with lookahead^2 / curve radius; 0.5 keeps
  // it under ~0.3 m on a 35 m radius at full speed.
  double lookahead_gain = 0.5;
  double lookahead_min = 3.0;
  double lookahead_max = 10.0;
  double lane_halfwidth = 1.6;    // lead-agent lateral window around the route, m

  // Blocked-lane handling: "yield" stops behind a near-stationary blocker
  // until the overtaking lane is clear of oncoming traffic; "overtake"
  // swerves as soon as the blocker is within trigger_distance. Both variants
  // behave identically until that trigger.
  enum class LaneBlockMode { none, yield, overtake };
  LaneBlockMode lane_block = LaneBlockMode::none;
  double trigger_distance = 18.0;  // m from ego to blocker
  double swerve_offset = 3.4;      // m, lateral offset of the bypass path
  double swerve_span = 14.0;       // m of route before/after the blocker at full offset
  double oncoming_window = 60.0;   // m ahead of the blocker scanned for oncoming traffic
};

class ExpertPolicy : public Policy {
 public:
  ExpertPolicy(const World& world, const SimConfig& cfg, const ExpertParams& params);

  // Forward-simulates this same policy for T*dt_wp seconds; waypoints in the
  // frame of `ego` at time t. Used as the ground-truth label at collection.
  Trajectory plan(const SceneSnapshot& snap, const EgoState& ego, double t) override;
  std::optional<ControlCommand> control(const EgoState& ego, double t, double dt) override;

  // True once the route blocker logic has fired at least once (test hook for
  // locating the decision tick).
  bool swerve_engaged() const { return swerve_engaged_; }

 private:
  struct RolloutState {
    double progress = 0.0;
    std::vector<char> satisfied;
    bool swerving = false;
    double blocker_s = -1.0;  // route arclength of the latched blocker
    int blocker_id = -1;
  };

  ControlCommand decide(const EgoState& ego, double t, RolloutState& rs, bool live) const;
  double path_offset_at(double s, const RolloutState& rs) const;

  const World* world_;
  SimConfig cfg_;
  ExpertParams params_;
  RolloutState live_;
  mutable bool swerve_engaged_ = false;
};

}  // namespace vplan
