#pragma once

#include "afe/model.hpp"
#include "afe/train.hpp"

namespace afe_test {

// Small architecture for gradient checks (about 1.7k parameters).
inline afe::ModelConfig tiny_config() {
  afe::ModelConfig c;
  c.latent_channels = 4;
  c.latent_frames = 12;
  c.feature_max_level = 1;
  c.feature_frames = 24;
  c.hidden = 8;
  c.blocks = 2;
  c.time_embed_dim = 4;
  c.conv_kernel = 3;
  c.sync_hidden_mult = 2;
  c.feature_scale = 0.05;
  return c;
}

inline afe::FlowExample random_example(const afe::ModelConfig& c, afe::Rng& rng, int prompt) {
  afe::FlowExample ex;
  ex.x1 = afe::standard_normal_latent(c.latent_channels, c.latent_frames, rng);
  afe::ControlTrack track = afe::ControlTrack::zeros(10);
  for (Eigen::Index j = 0; j < 10; ++j) track.frames(prompt < 0 ? 0 : prompt, j) = rng.uniform();
  ex.cond = afe::ConditionBundle::make(afe::PromptLabel{prompt}, track, c.latent_frames);
  if (prompt < 0) ex.cond.prompt = afe::PromptLabel::null();
  ex.feats.max_level = c.feature_max_level;
  ex.feats.channels.resize(c.feature_channels(), c.feature_frames);
  for (Eigen::Index i = 0; i < ex.feats.channels.size(); ++i) ex.feats.channels(i) = 20.0 * rng.normal();
  return ex;
}

template <typename Net>
void randomize(Net& net, afe::Rng& rng, double scale) {
  for (const auto& b : net.layout()) {
    if (b.group == afe::ParamGroup::Buffer) continue;
    for (std::size_t i = 0; i < b.size(); ++i) {
      net.params()[b.offset + i] = static_cast<typename Net::Scalar>(scale * rng.normal());
    }
  }
}

// Training set of n rendered scenes at the full latent size.
afe::TrainingSet scene_training_set(int n, std::uint64_t seed, int max_level = 3);

// Worst per-parameter relative error between the analytic gradient and
// central differences of fm_loss_at, for one random seed.
double gradient_check_error(std::uint64_t seed);

}  // namespace afe_test
