#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vplan/dataset.hpp"
#include "vplan/model.hpp"
#include "vplan/scene.hpp"
#include "vplan/vocabulary.hpp"

namespace vplan {

// Normalized probabilities over the vocabulary (plus the appended ground
// truth at train time, flagged by index_of_gt >= 0).
struct ActionDistribution {
  std::vector<double> probs;
  int index_of_gt = -1;

  void validate() const;
};

struct TrainConfig {
  double tau = 0.5;             // m, soft-target temperature
  double lambda_conflict = 5.0;
  double lr = 1e-4;
  // "constant", or "cosine": half-cosine decay from lr to lr_min across the
  // run (a resumed run decays over its remaining span).
  std::string lr_schedule = "constant";
  double lr_min = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 32;
  int steps = 20000;
  uint32_t seed = 1;
  bool use_dist_loss = true;  // ablation switch

  void validate() const;
};

struct LossReport {
  int64_t step = 0;
  double loss_total = 0.0;
  double loss_dist = 0.0;
  double loss_conflict = 0.0;
  double grad_norm = 0.0;
};

std::string loss_report_json(const LossReport& r);

// Per-action logits over the provided planning tokens (forward only).
std::vector<double> score_actions(const PlanningVocabulary& vocab, const SceneSnapshot& snap,
                                  ad::ParamStore<float>& params, const ModelConfig& cfg,
                                  const AblationFlags& ab = {});

// Softmax at double precision; entries positive, sum 1 within 1e-6.
ActionDistribution action_distribution(std::span<const double> logits);

// p_data over N vocabulary actions plus the appended gt:
// p_data(a) proportional to exp(-ADE(a, gt)^2 / tau^2); gt distance is 0.
std::vector<double> build_target_distribution(const PlanningVocabulary& vocab,
                                              const Trajectory& gt, double tau);

// KL(target || pred) = sum_i target_i (ln target_i - ln pred_i).
double distribution_loss(const ActionDistribution& pred, std::span<const double> target);

// Entry i true iff vocabulary action i conflicts with any agent future or the
// road boundary in the snapshot.
std::vector<uint8_t> conflict_mask(const PlanningVocabulary& vocab, const SceneSnapshot& snap,
                                   double inflation = 0.0);

// lambda * total predicted mass on masked actions. The appended gt entry is
// never masked; a mask covering it is an internal-consistency error.
double conflict_loss(const ActionDistribution& pred, std::span<const uint8_t> mask,
                     double lambda_conflict);

// Vocabulary action at the distribution argmax; ties to the lowest index.
const Trajectory& select_action_argmax(const ActionDistribution& dist,
                                       const PlanningVocabulary& vocab);
int argmax_index(const ActionDistribution& dist);

// Top-K proposals filtered by the rule wrapper: conflicting proposals, and
// proposals crossing an affecting red light's stop line (or an affecting stop
// sign's line while moving), are discarded; best survivor wins; the
// near-stationary action is the fallback.
struct TopKResult {
  int chosen_index = -1;
  std::vector<int> topk;
  bool fell_back = false;
};

TopKResult select_topk_with_rules(const ActionDistribution& dist, const PlanningVocabulary& vocab,
                                  const SceneSnapshot& snap, int K);

// Owns one training run: parameter store, Adam state, per-frame caches
// (features, targets, conflict masks, token matrices), and the deterministic
// batch sampler. Single-threaded; one instance per run.
class Trainer {
 public:
  Trainer(const PlanningVocabulary& vocab, const DemoDataset& data, const ModelConfig& mcfg,
          const TrainConfig& tcfg, ad::ParamStore<float> params,
          const AblationFlags& ab = {});

  // One optimizer step over a sampled batch. Throws NumericError naming the
  // frame on a non-finite loss.
  LossReport step();

  ad::ParamStore<float>& params() { return params_; }
  const ModelConfig& model_config() const { return mcfg_; }
  int64_t steps_done() const { return step_; }

 private:
  struct FrameCache {
    ad::Tensor<float> tokens;          // (N+1, 4TL), gt encoding appended
    SceneFeatures<float> features;
    std::vector<double> target;        // N+1
    double target_entropy = 0.0;       // sum p ln p
    std::vector<uint8_t> mask;         // N
  };

  const PlanningVocabulary* vocab_;
  const DemoDataset* data_;
  ModelConfig mcfg_;
  TrainConfig tcfg_;
  AblationFlags ab_;
  ad::ParamStore<float> params_;
  std::vector<FrameCache> cache_;
  std::mt19937 rng_;
  int64_t step_ = 0;
  int64_t schedule_end_ = 0;  // step count the cosine schedule decays toward
};

}  // namespace vplan
