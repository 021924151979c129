#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "afe/condition.hpp"
#include "afe/features.hpp"
#include "afe/latent.hpp"
#include "afe/rng.hpp"

namespace afe {

// u(x_t, t, C, a). Null conditions are passed as ConditionBundle::null()
// and AcousticFeatures::null().
class VelocityField {
public:
  virtual ~VelocityField() = default;
  virtual LatentClip velocity(const LatentClip& x, double t, const ConditionBundle& c,
                              const AcousticFeatures& a) const = 0;
  virtual Eigen::Index latent_channels() const = 0;
  virtual Eigen::Index latent_frames() const = 0;
  virtual int feature_max_level() const { return kDefaultMaxLevel; }
  virtual Eigen::Index feature_frames() const { return 2 * latent_frames(); }
};

struct GuidanceWeights {
  double w1 = 7.5;
  double w2 = 3.75;

  void validate() const;
  // w2 defaults to half of w1.
  static GuidanceWeights from_w1(double w1) { return {w1, 0.5 * w1}; }
};

enum class OdeScheme { Euler, Midpoint };

struct SamplerConfig {
  int n_steps = 50;
  OdeScheme scheme = OdeScheme::Midpoint;
  std::uint64_t seed = 0;

  void validate() const;
};

// t * x0 + (1 - t) * x1, literally.
LatentClip interpolate(const LatentClip& x0, const LatentClip& x1, double t);
// x1 - x0, independent of t.
LatentClip target_velocity(const LatentClip& x0, const LatentClip& x1);

// Training path: t = 0 carries the noise sample and t = 1 the data sample.
// Built from interpolate() with the arguments swapped, so the regression
// target is target_velocity(noise, data) = data - noise.
LatentClip path_point(const LatentClip& noise, const LatentClip& data, double t);
LatentClip path_velocity(const LatentClip& noise, const LatentClip& data);

struct FlowExample {
  LatentClip x1;
  ConditionBundle cond;
  AcousticFeatures feats;
};

// Per-example prior sample and time, drawn in batch order.
struct FlowDraw {
  LatentClip noise;
  double t = 0.0;
};

std::vector<FlowDraw> draw_flow(std::span<const FlowExample> batch, Rng& rng);

// Mean squared error between the field and the path velocity, averaged
// over batch and elements.
double fm_loss_at(const VelocityField& field, std::span<const FlowExample> batch, std::span<const FlowDraw> draws);
double fm_loss(const VelocityField& field, std::span<const FlowExample> batch, Rng& rng);

// u(0,0) + w1 (u(C,0) - u(0,0)) + w2 (u(C,a) - u(C,0)); three evaluations.
LatentClip guided_velocity(const VelocityField& field, const LatentClip& x, double t, const ConditionBundle& c,
                           const AcousticFeatures& a, const GuidanceWeights& g);
// u(0) + w (u(C) - u(0)) with null acoustic features; two evaluations.
LatentClip guided_velocity_single(const VelocityField& field, const LatentClip& x, double t,
                                  const ConditionBundle& c, double w);

LatentClip standard_normal_latent(Eigen::Index channels, Eigen::Index frames, Rng& rng);

// Integrates dx/dt = guided velocity from t = 0 to 1 starting at x0.
LatentClip integrate(const VelocityField& field, const SamplerConfig& cfg, const LatentClip& x0,
                     const ConditionBundle& c, const AcousticFeatures& a, const GuidanceWeights& g);
// Same, from standard-normal noise seeded by cfg.seed.
LatentClip sample(const VelocityField& field, const SamplerConfig& cfg, const ConditionBundle& c,
                  const AcousticFeatures& a, const GuidanceWeights& g);

}  // namespace afe
