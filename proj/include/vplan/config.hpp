#pragma once

#include <string>
#include <vector>

#include "vplan/expert.hpp"
#include "vplan/model.hpp"
#include "vplan/planner.hpp"
#include "vplan/sim.hpp"

namespace vplan {

struct RunPaths {
  std::string scenarios_dir = "scenarios";
  std::string dataset;     // default: <output_dir>/demos.vpd
  std::string vocab_file;  // default: <output_dir>/vocab.vpv
  std::string checkpoint;  // default: <output_dir>/model.vpc
  std::string output_dir = "out";
};

// One config file drives every command; CLI flags override single fields and
// the VPLAN_OUTPUT_DIR environment variable overrides the output directory.
struct RunConfig {
  int schema_version = 1;
  long long seed = -1;  // mandatory in config files
  RunPaths paths;

  // vocabulary geometry
  int vocab_n = 128;
  int horizon = 6;
  double dt_wp = 0.5;
  int bands = 8;

  ModelConfig model{64, 4, 2, 128};  // bands/horizon/vocab_size synced in finalize()
  TrainConfig train;

  // eval
  int top_k = 8;
  std::string eval_policy = "argmax";  // argmax | topk | expert
  PenaltyConfig penalties;
  AblationFlags ablation;

  // collect
  std::vector<uint32_t> collect_seeds = {0};
  // Expert variants run per scenario x seed; empty means "use expert.lane_block
  // as configured". Lets one collection pass gather multimodal demonstrations.
  std::vector<std::string> collect_variants;
  // Extra short episodes per scenario x seed started mid-route with a lateral/
  // heading offset, so demonstrations cover the expert's recovery behavior.
  int collect_recovery_per_seed = 0;
  ExpertParams expert;

  void validate() const;
  // Applies the env override, fills defaulted paths, and syncs the derived
  // fields (model.bands/horizon/vocab_size, train.seed). Call after any CLI
  // overrides, before validate().
  void finalize();
};

RunConfig load_run_config(const std::string& path);

const char* lane_block_name(ExpertParams::LaneBlockMode m);
ExpertParams::LaneBlockMode lane_block_from_name(const std::string& s);

}  // namespace vplan
