#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "afe/augment.hpp"
#include "afe/corpus.hpp"
#include "afe/model.hpp"

namespace afe {

enum class OptimizerKind { Momentum, Adam };

struct TrainSchedule {
  int total_steps = 2000;
  int batch_size = 16;
  double freeze_fraction = 0.5;
  OptimizerKind optimizer = OptimizerKind::Momentum;
  double learning_rate = 0.05;
  double final_lr_fraction = 0.05;  // cosine decay floor, relative to learning_rate
  double momentum = 0.9;            // heavy-ball coefficient, or Adam beta1
  double beta2 = 0.999;             // Adam only
  double grad_clip = 1.0;           // global L2 norm; <= 0 disables
  int checkpoint_every = 0;         // 0 disables periodic checkpoints
  std::uint64_t seed = 0;

  void validate() const;
  // First step index at which modulation parameters may change.
  int unfreeze_step() const;
  double lr_at(int step) const;
};

// Precomputed training material: standardized target latents, condition
// bundles and the loudness hierarchy of each target clip.
struct TrainingSet {
  std::vector<LatentClip> latents;
  std::vector<ConditionBundle> conditions;
  std::vector<LoudnessHierarchy> hierarchies;
  LatentStats stats;

  std::size_t size() const { return latents.size(); }
};

// Fits latent stats on items unless stats is given.
TrainingSet build_training_set(const std::vector<CorpusItem>& items, const MelCodec& codec, int max_level,
                               const LatentStats* stats = nullptr, const FeatureConfig& fcfg = {});

// Augmented example i of a batch at the given step; a pure function of
// (set, policy, step seed).
FlowExample augmented_example(const TrainingSet& set, std::size_t index, const AugmentPolicy& policy, Rng& rng);

struct TrainResult {
  std::vector<double> loss_trace;
  int first_modulation_update = -1;
};

using CheckpointHook = std::function<void(int step, const VelocityModel& model)>;

// Flow-matching training. Modulation parameters are frozen (no update and
// no optimizer state) while step < unfreeze_step(). A non-finite loss or
// gradient throws DivergenceError; the hook only ever sees finite models.
TrainResult train(VelocityModel& model, const TrainingSet& set, const TrainSchedule& schedule,
                  const AugmentPolicy& policy, int jobs = 1, const CheckpointHook& hook = {});

// Deterministic flow-matching loss over the whole set with unmasked
// features, fixed noise and times drawn from seed.
double evaluation_loss(const VelocityModel& model, const TrainingSet& set, std::uint64_t seed,
                       bool with_features = true);

}  // namespace afe
