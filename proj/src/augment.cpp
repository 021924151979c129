#include "afe/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "afe/errors.hpp"

namespace afe {

namespace {
bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }
}  // namespace

void AugmentPolicy::validate() const {
  if (!is_probability(p_full_mask) || !is_probability(temporal_mask_rate) || !is_probability(p_drop_condition)) {
    throw InvalidInput("augment probabilities must lie in [0, 1]");
  }
  if (level_distribution.empty()) throw InvalidInput("level distribution is empty");
  double sum = 0.0;
  for (double p : level_distribution) {
    if (!(p >= 0.0)) throw InvalidInput("level probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("level distribution must sum to 1");
  if (span_min < 1 || span_min > span_max) throw InvalidInput("temporal span bounds must satisfy 1 <= min <= max");
}

AugmentPolicy AugmentPolicy::identity(int max_level) {
  AugmentPolicy p;
  p.p_full_mask = 0.0;
  p.level_distribution.assign(static_cast<std::size_t>(max_level + 1), 0.0);
  p.level_distribution.back() = 1.0;
  p.temporal_mask_rate = 0.0;
  p.p_drop_condition = 0.0;
  return p;
}

DetailMask sample_detail_mask(const AugmentPolicy& policy, Rng& rng, Eigen::Index frames) {
  const int L = policy.max_level();
  if (rng.bernoulli(policy.p_full_mask)) return DetailMask::none(L, frames);
  const double u = rng.uniform();
  double acc = 0.0;
  int level = L;
  for (int l = 0; l <= L; ++l) {
    acc += policy.level_distribution[static_cast<std::size_t>(l)];
    if (u < acc) {
      level = l;
      break;
    }
  }
  // Guard against a rounding gap at the top of the cumulative sum.
  while (policy.level_distribution[static_cast<std::size_t>(level)] == 0.0 && level > 0) --level;
  return DetailMask::pure(level, L, frames);
}

AcousticFeatures apply_temporal_mask(const AcousticFeatures& feat, const AugmentPolicy& policy, Rng& rng) {
  const Eigen::Index T = feat.frames();
  const auto target = static_cast<Eigen::Index>(std::llround(policy.temporal_mask_rate * static_cast<double>(T)));
  if (target <= 0 || T == 0) return feat;

  AcousticFeatures out = feat;
  std::vector<char> masked(static_cast<std::size_t>(T), 0);
  Eigen::Index count = 0;
  const int span_hi = static_cast<int>(std::min<Eigen::Index>(policy.span_max, T));
  const int span_lo = std::min(policy.span_min, span_hi);
  while (count < target) {
    const int len = rng.uniform_int(span_lo, span_hi);
    const int start = rng.uniform_int(0, static_cast<int>(T) - len);
    for (int t = start; t < start + len && count < target; ++t) {
      if (!masked[static_cast<std::size_t>(t)]) {
        masked[static_cast<std::size_t>(t)] = 1;
        out.channels.col(t).setZero();
        ++count;
      }
    }
  }
  return out;
}

ConditionBundle drop_condition(const ConditionBundle& c, const AugmentPolicy& policy, Rng& rng) {
  if (!rng.bernoulli(policy.p_drop_condition)) return c;
  return ConditionBundle::null(c.control.n_frames(), c.sync.cols());
}

}  // namespace afe
