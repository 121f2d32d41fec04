#pragma once

#include <functional>
#include <span>

#include "vplan/dataset.hpp"
#include "vplan/geometry.hpp"

namespace vplan {

// Open-loop quality of a snapshot->trajectory policy against demonstration
// frames. L2 horizons are the waypoints nearest 1/2/3 s; collision rates are
// the percentage of frames whose predicted trajectory conflicts with any
// ground-truth agent future truncated to the same horizon.
struct OpenLoopMetrics {
  double l2_1s = 0.0, l2_2s = 0.0, l2_3s = 0.0;
  double collision_1s = 0.0, collision_2s = 0.0, collision_3s = 0.0;  // percent
  int frames = 0;
};

OpenLoopMetrics open_loop_metrics(std::span<const DemoFrame> frames, double dt_wp,
                                  const Footprint& ego_fp,
                                  const std::function<Trajectory(const DemoFrame&)>& policy);

}  // namespace vplan
