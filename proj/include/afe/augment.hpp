#pragma once

#include <cstdint>
#include <vector>

#include "afe/condition.hpp"
#include "afe/features.hpp"
#include "afe/rng.hpp"

namespace afe {

// Training-time masking of the acoustic features and condition dropout.
struct AugmentPolicy {
  double p_full_mask = 0.1;
  std::vector<double> level_distribution = std::vector<double>(kDefaultMaxLevel + 1, 0.25);
  double temporal_mask_rate = 0.3;
  int span_min = 10;
  int span_max = 50;
  double p_drop_condition = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  int max_level() const { return static_cast<int>(level_distribution.size()) - 1; }

  // Policy that leaves every input untouched.
  static AugmentPolicy identity(int max_level = kDefaultMaxLevel);
};

// All-zero mask with probability p_full_mask, otherwise the pure detail
// mask at a level drawn from level_distribution.
DetailMask sample_detail_mask(const AugmentPolicy& policy, Rng& rng, Eigen::Index frames);

// Zeroes contiguous spans (value and indicator channels together) until
// round(rate * T) frames are masked.
AcousticFeatures apply_temporal_mask(const AcousticFeatures& feat, const AugmentPolicy& policy, Rng& rng);

// Null bundle with probability p_drop_condition, otherwise the input.
ConditionBundle drop_condition(const ConditionBundle& c, const AugmentPolicy& policy, Rng& rng);

}  // namespace afe
