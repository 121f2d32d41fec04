#pragma once

#include <string>
#include <vector>

#include "vplan/scene.hpp"

namespace vplan {

// One 2 Hz demonstration sample: what the expert saw, where it went over the
// next T*dt_wp seconds, and what it commanded at that instant.
struct DemoFrame {
  SceneSnapshot snapshot;
  Trajectory gt;
  ControlRecord expert_control;
  int scenario_id = 0;
  double t = 0.0;
};

struct DemoDataset {
  std::vector<DemoFrame> frames;
  std::vector<std::string> scenario_names;
  double tick_rate = 2.0;  // Hz
  int horizon = 6;
  double dt_wp = 0.5;

  void validate() const;
};

// Little-endian binary round trip, bit-exact. Magic "VPD1".
void save_dataset(const std::string& path, const DemoDataset& d);
DemoDataset load_dataset(const std::string& path);

}  // namespace vplan
