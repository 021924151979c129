#include "afe/condition.hpp"

#include <cmath>

#include "afe/errors.hpp"

namespace afe {

Eigen::MatrixXd resample_time(const Eigen::MatrixXd& x, Eigen::Index n_out) {
  if (n_out <= 0 || x.cols() == 0) throw InvalidInput("resample_time: empty input or output");
  const Eigen::Index n_src = x.cols();
  if (n_src == n_out) return x;
  Eigen::MatrixXd out(x.rows(), n_out);
  if (n_out == 1) {
    out.col(0) = x.col(0);
    return out;
  }
  const double scale = static_cast<double>(n_src - 1) / static_cast<double>(n_out - 1);
  for (Eigen::Index k = 0; k < n_out; ++k) {
    const double pos = static_cast<double>(k) * scale;
    const auto i0 = std::min(static_cast<Eigen::Index>(std::floor(pos)), n_src - 1);
    const double frac = pos - static_cast<double>(i0);
    if (frac == 0.0 || i0 + 1 >= n_src) {
      out.col(k) = x.col(i0);
    } else {
      out.col(k) = (1.0 - frac) * x.col(i0) + frac * x.col(i0 + 1);
    }
  }
  return out;
}

ConditionBundle ConditionBundle::make(const PromptLabel& prompt, const ControlTrack& control,
                                      Eigen::Index latent_frames) {
  if (control.frames.rows() != kNumClasses) throw InvalidInput("control track must have one channel per class");
  ConditionBundle c;
  c.prompt = prompt;
  c.control = control;
  c.sync = resample_time(control.frames, latent_frames);
  return c;
}

ConditionBundle ConditionBundle::null(Eigen::Index control_frames, Eigen::Index latent_frames) {
  ConditionBundle c;
  c.prompt = PromptLabel::null();
  c.control = ControlTrack::zeros(control_frames);
  c.sync = Eigen::MatrixXd::Zero(kNumClasses, latent_frames);
  return c;
}

}  // namespace afe
