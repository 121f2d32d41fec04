#pragma once

#include "vplan/planner.hpp"
#include "vplan/sim.hpp"

namespace vplan {

// Closed-loop policy around a trained scoring head: either executes the
// distribution argmax directly or filters the top-K proposals through the
// safety rules before executing the best survivor.
class VocabularyPolicy : public Policy {
 public:
  enum class Mode { argmax, topk };

  VocabularyPolicy(const PlanningVocabulary& vocab, ad::ParamStore<float> params,
                   const ModelConfig& mcfg, Mode mode, int top_k = 8,
                   const AblationFlags& ab = {});

  Trajectory plan(const SceneSnapshot& snap, const EgoState& ego, double t) override;
  int argmax_index() const override { return last_argmax_; }
  std::vector<int> topk_indices() const override { return last_topk_; }
  bool ever_fell_back() const { return ever_fell_back_; }
  const ActionDistribution& last_distribution() const { return last_dist_; }

 private:
  const PlanningVocabulary* vocab_;
  ad::ParamStore<float> params_;
  ModelConfig mcfg_;
  Mode mode_;
  int top_k_;
  AblationFlags ab_;
  int last_argmax_ = -1;
  std::vector<int> last_topk_;
  bool ever_fell_back_ = false;
  ActionDistribution last_dist_;
};

// Executes one fixed ego-frame plan forever (test and baseline plumbing).
class FixedPlanPolicy : public Policy {
 public:
  explicit FixedPlanPolicy(Trajectory plan) : plan_(std::move(plan)) {}
  Trajectory plan(const SceneSnapshot&, const EgoState&, double) override { return plan_; }

 private:
  Trajectory plan_;
};

}  // namespace vplan
