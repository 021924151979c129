#pragma once

#include <Eigen/Dense>

#include "afe/scene.hpp"

namespace afe {

// Linear-interpolation length regulation along columns: output column k
// samples source position k * (n_src - 1) / (n_out - 1). Endpoints are kept.
Eigen::MatrixXd resample_time(const Eigen::MatrixXd& x, Eigen::Index n_out);

// Text/video condition C: prompt, control track (global role) and the same
// track regulated to the latent frame rate (frame-wise sync role).
struct ConditionBundle {
  PromptLabel prompt;
  ControlTrack control;
  Eigen::MatrixXd sync;  // kNumClasses x T_lat

  bool is_null() const { return prompt.is_null() && control.frames.isZero(0.0) && sync.isZero(0.0); }

  static ConditionBundle make(const PromptLabel& prompt, const ControlTrack& control, Eigen::Index latent_frames);
  static ConditionBundle null(Eigen::Index control_frames, Eigen::Index latent_frames);
};

}  // namespace afe
