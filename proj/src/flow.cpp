#include "afe/flow.hpp"

#include <cmath>

#include "afe/errors.hpp"

namespace afe {

void GuidanceWeights::validate() const {
  if (!std::isfinite(w1) || !std::isfinite(w2) || w1 < 0.0 || w2 < 0.0) {
    throw InvalidInput("guidance weights must be finite and non-negative");
  }
}

void SamplerConfig::validate() const {
  if (n_steps < 1) throw InvalidInput("sampler needs at least one step");
}

namespace {

void check_same_shape(const LatentClip& a, const LatentClip& b) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
    throw InvalidInput("latent shape mismatch");
  }
}

LatentClip with_values(const LatentClip& like, Eigen::MatrixXd values) {
  LatentClip out;
  out.frame_rate = like.frame_rate;
  out.values = std::move(values);
  return out;
}

}  // namespace

LatentClip interpolate(const LatentClip& x0, const LatentClip& x1, double t) {
  check_same_shape(x0, x1);
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("interpolation time outside [0, 1]");
  return with_values(x0, t * x0.values + (1.0 - t) * x1.values);
}

LatentClip target_velocity(const LatentClip& x0, const LatentClip& x1) {
  check_same_shape(x0, x1);
  return with_values(x0, x1.values - x0.values);
}

LatentClip path_point(const LatentClip& noise, const LatentClip& data, double t) {
  return interpolate(data, noise, t);
}

LatentClip path_velocity(const LatentClip& noise, const LatentClip& data) {
  return target_velocity(noise, data);
}

LatentClip standard_normal_latent(Eigen::Index channels, Eigen::Index frames, Rng& rng) {
  LatentClip out;
  out.values.resize(channels, frames);
  for (Eigen::Index c = 0; c < frames; ++c) {
    for (Eigen::Index r = 0; r < channels; ++r) out.values(r, c) = rng.normal();
  }
  return out;
}

std::vector<FlowDraw> draw_flow(std::span<const FlowExample> batch, Rng& rng) {
  std::vector<FlowDraw> draws;
  draws.reserve(batch.size());
  for (const auto& ex : batch) {
    FlowDraw d;
    d.noise = standard_normal_latent(ex.x1.channels(), ex.x1.frames(), rng);
    d.noise.frame_rate = ex.x1.frame_rate;
    d.t = rng.uniform();
    draws.push_back(std::move(d));
  }
  return draws;
}

double fm_loss_at(const VelocityField& field, std::span<const FlowExample> batch, std::span<const FlowDraw> draws) {
  if (batch.size() != draws.size() || batch.empty()) throw InvalidInput("fm_loss: batch and draws differ in size");
  double total = 0.0;
  double count = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ex = batch[i];
    const auto xt = path_point(draws[i].noise, ex.x1, draws[i].t);
    const auto u = field.velocity(xt, draws[i].t, ex.cond, ex.feats);
    check_same_shape(u, ex.x1);
    if (!u.values.allFinite()) throw DivergenceError("velocity model produced non-finite output");
    const auto v = path_velocity(draws[i].noise, ex.x1);
    total += (u.values - v.values).squaredNorm();
    count += static_cast<double>(v.values.size());
  }
  return total / count;
}

double fm_loss(const VelocityField& field, std::span<const FlowExample> batch, Rng& rng) {
  const auto draws = draw_flow(batch, rng);
  return fm_loss_at(field, batch, draws);
}

namespace {

ConditionBundle null_like(const ConditionBundle& c) { return ConditionBundle::null(c.control.n_frames(), c.sync.cols()); }

AcousticFeatures null_like(const AcousticFeatures& a) { return AcousticFeatures::null(a.max_level, a.frames()); }

}  // namespace

LatentClip guided_velocity(const VelocityField& field, const LatentClip& x, double t, const ConditionBundle& c,
                           const AcousticFeatures& a, const GuidanceWeights& g) {
  const ConditionBundle c_null = null_like(c);
  const AcousticFeatures a_null = null_like(a);
  const auto u_00 = field.velocity(x, t, c_null, a_null);
  const auto u_c0 = field.velocity(x, t, c, a_null);
  const auto u_ca = a.is_null() ? u_c0 : field.velocity(x, t, c, a);
  return with_values(x, u_00.values + g.w1 * (u_c0.values - u_00.values) + g.w2 * (u_ca.values - u_c0.values));
}

LatentClip guided_velocity_single(const VelocityField& field, const LatentClip& x, double t,
                                  const ConditionBundle& c, double w) {
  const AcousticFeatures a_null = AcousticFeatures::null(field.feature_max_level(), field.feature_frames());
  const auto u_0 = field.velocity(x, t, null_like(c), a_null);
  const auto u_c = field.velocity(x, t, c, a_null);
  return with_values(x, u_0.values + w * (u_c.values - u_0.values));
}

LatentClip integrate(const VelocityField& field, const SamplerConfig& cfg, const LatentClip& x0,
                     const ConditionBundle& c, const AcousticFeatures& a, const GuidanceWeights& g) {
  cfg.validate();
  LatentClip x = x0;
  const double h = 1.0 / cfg.n_steps;
  for (int k = 0; k < cfg.n_steps; ++k) {
    const double t = static_cast<double>(k) * h;
    if (cfg.scheme == OdeScheme::Euler) {
      x.values += h * guided_velocity(field, x, t, c, a, g).values;
    } else {
      LatentClip mid = x;
      mid.values += 0.5 * h * guided_velocity(field, x, t, c, a, g).values;
      x.values += h * guided_velocity(field, mid, t + 0.5 * h, c, a, g).values;
    }
    if (!x.values.allFinite()) throw DivergenceError("sampling produced non-finite state");
  }
  return x;
}

LatentClip sample(const VelocityField& field, const SamplerConfig& cfg, const ConditionBundle& c,
                  const AcousticFeatures& a, const GuidanceWeights& g) {
  Rng rng(cfg.seed);
  LatentClip x0 = standard_normal_latent(field.latent_channels(), field.latent_frames(), rng);
  return integrate(field, cfg, x0, c, a, g);
}

}  // namespace afe
