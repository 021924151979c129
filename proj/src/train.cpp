#include "afe/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

#include "afe/errors.hpp"

namespace afe {

void TrainSchedule::validate() const {
  if (total_steps < 0) throw InvalidInput("total_steps must be non-negative");
  if (batch_size < 1) throw InvalidInput("batch_size must be positive");
  if (!(freeze_fraction >= 0.0 && freeze_fraction <= 1.0)) throw InvalidInput("freeze_fraction must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw InvalidInput("learning_rate must be positive");
  if (!(final_lr_fraction >= 0.0 && final_lr_fraction <= 1.0)) throw InvalidInput("final_lr_fraction must lie in [0, 1]");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidInput("momentum must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidInput("beta2 must lie in [0, 1)");
  if (checkpoint_every < 0) throw InvalidInput("checkpoint_every must be non-negative");
}

int TrainSchedule::unfreeze_step() const {
  return static_cast<int>(std::ceil(freeze_fraction * static_cast<double>(total_steps) - 1e-12));
}

double TrainSchedule::lr_at(int step) const {
  if (total_steps <= 1) return learning_rate;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps - 1);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return learning_rate * (final_lr_fraction + (1.0 - final_lr_fraction) * cosine);
}

TrainingSet build_training_set(const std::vector<CorpusItem>& items, const MelCodec& codec, int max_level,
                               const LatentStats* stats, const FeatureConfig& fcfg) {
  if (items.empty()) throw InvalidInput("training set is empty");
  TrainingSet set;
  std::vector<Eigen::MatrixXd> mels;
  mels.reserve(items.size());
  for (const auto& item : items) mels.push_back(codec.log_mel(item.audio));
  set.stats = stats ? *stats : MelCodec::fit_stats(mels);

  for (std::size_t i = 0; i < items.size(); ++i) {
    LatentClip z;
    z.values = (mels[i].colwise() - set.stats.mean).array().colwise() / set.stats.stddev.array();
    set.latents.push_back(std::move(z));
    const auto& item = items[i];
    set.conditions.push_back(
        ConditionBundle::make(PromptLabel{item.entry.class_id}, item.control, set.latents.back().frames()));
    set.hierarchies.push_back(loudness_hierarchy(stft_magnitude(item.audio, fcfg), max_level, fcfg));
  }
  return set;
}

FlowExample augmented_example(const TrainingSet& set, std::size_t index, const AugmentPolicy& policy, Rng& rng) {
  const auto& h = set.hierarchies.at(index);
  FlowExample ex;
  ex.x1 = set.latents[index];
  const DetailMask mask = sample_detail_mask(policy, rng, h.frames());
  ex.feats = apply_temporal_mask(assemble_features(h, mask), policy, rng);
  ex.cond = drop_condition(set.conditions[index], policy, rng);
  return ex;
}

namespace {

bool all_finite(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

}  // namespace

TrainResult train(VelocityModel& model, const TrainingSet& set, const TrainSchedule& schedule,
                  const AugmentPolicy& policy, int jobs, const CheckpointHook& hook) {
  schedule.validate();
  policy.validate();
  if (set.size() == 0) throw InvalidInput("training set is empty");
  if (policy.max_level() != model.config().feature_max_level) {
    throw InvalidInput("augment policy and model disagree on the feature level count");
  }
  model.set_latent_stats(set.stats);

  const std::size_t P = model.param_count();
  std::vector<char> trainable(P, 0), modulation(P, 0);
  for (const auto& b : model.layout()) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      trainable[b.offset + i] = b.group != ParamGroup::Buffer;
      modulation[b.offset + i] = b.group == ParamGroup::Modulation;
    }
  }

  VelocityModel::Buffer grad;
  std::vector<float> m1(P, 0.0f), m2(P, 0.0f);
  std::vector<int> updates(P, 0);  // per-parameter Adam step count
  TrainResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(schedule.total_steps));
  const int unfreeze = schedule.unfreeze_step();
  const auto batch_size = static_cast<std::size_t>(schedule.batch_size);
  const std::uint64_t root = derive_seed(schedule.seed, "training");
  auto& params = model.params();

  for (int step = 0; step < schedule.total_steps; ++step) {
    const bool frozen = step < unfreeze;
    Rng batch_rng(derive_seed(root, static_cast<std::uint64_t>(step)));
    std::vector<FlowExample> batch;
    std::vector<FlowDraw> draws;
    for (std::size_t i = 0; i < batch_size; ++i) {
      const auto idx = static_cast<std::size_t>(batch_rng.uniform_int(0, static_cast<int>(set.size()) - 1));
      Rng ex_rng(derive_seed(batch_rng.next_u64(), "example"));
      batch.push_back(augmented_example(set, idx, policy, ex_rng));
      FlowDraw d;
      d.noise = standard_normal_latent(batch.back().x1.channels(), batch.back().x1.frames(), ex_rng);
      d.t = ex_rng.uniform();
      draws.push_back(std::move(d));
    }

    const double loss = model.loss_and_gradient(batch, draws, grad, jobs);
    if (!std::isfinite(loss) || !all_finite(grad)) {
      throw DivergenceError("non-finite loss at step " + std::to_string(step));
    }
    result.loss_trace.push_back(loss);

    double norm_sq = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      if (trainable[p] && !(frozen && modulation[p])) norm_sq += static_cast<double>(grad[p]) * grad[p];
    }
    const double norm = std::sqrt(norm_sq);
    const double clip = (schedule.grad_clip > 0.0 && norm > schedule.grad_clip) ? schedule.grad_clip / norm : 1.0;
    const double lr = schedule.lr_at(step);
    const double b1 = schedule.momentum, b2 = schedule.beta2;

    bool modulation_changed = false;
    for (std::size_t p = 0; p < P; ++p) {
      if (!trainable[p] || (frozen && modulation[p])) continue;
      const double g = clip * grad[p];
      const float before = params[p];
      if (schedule.optimizer == OptimizerKind::Momentum) {
        m1[p] = static_cast<float>(b1 * m1[p] + g);
        params[p] = static_cast<float>(params[p] - lr * m1[p]);
      } else {
        const int n = ++updates[p];
        m1[p] = static_cast<float>(b1 * m1[p] + (1.0 - b1) * g);
        m2[p] = static_cast<float>(b2 * m2[p] + (1.0 - b2) * g * g);
        const double mhat = m1[p] / (1.0 - std::pow(b1, n));
        const double vhat = m2[p] / (1.0 - std::pow(b2, n));
        params[p] = static_cast<float>(params[p] - lr * mhat / (std::sqrt(vhat) + 1e-8));
      }
      if (modulation[p] && params[p] != before) modulation_changed = true;
    }
    if (modulation_changed && result.first_modulation_update < 0) result.first_modulation_update = step;

    if (hook && schedule.checkpoint_every > 0 && (step + 1) % schedule.checkpoint_every == 0) hook(step + 1, model);
  }
  return result;
}

double evaluation_loss(const VelocityModel& model, const TrainingSet& set, std::uint64_t seed, bool with_features) {
  if (set.size() == 0) throw InvalidInput("evaluation set is empty");
  const int L = model.config().feature_max_level;
  Rng rng(derive_seed(seed, "evaluation"));
  std::vector<FlowExample> batch;
  for (std::size_t i = 0; i < set.size(); ++i) {
    FlowExample ex;
    ex.x1 = set.latents[i];
    ex.cond = set.conditions[i];
    const auto& h = set.hierarchies[i];
    ex.feats = assemble_features(h, with_features ? DetailMask::pure(L, L, h.frames()) : DetailMask::none(L, h.frames()));
    batch.push_back(std::move(ex));
  }
  return fm_loss(model, batch, rng);
}

}  // namespace afe
