#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "afe/audio.hpp"

namespace afe {

inline constexpr int kLatentChannels = 40;
inline constexpr int kLatentFrames = 250;
inline constexpr double kLatentFrameRate = 31.25;

// D x T_lat latent; columns are frames.
struct LatentClip {
  Eigen::MatrixXd values;
  double frame_rate = kLatentFrameRate;

  Eigen::Index channels() const { return values.rows(); }
  Eigen::Index frames() const { return values.cols(); }
};

struct LatentStats {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(kLatentChannels);
  Eigen::VectorXd stddev = Eigen::VectorXd::Ones(kLatentChannels);
};

// Log-mel latent space: 1024-point STFT, hop 512, 40 mel bands over
// 0..8 kHz, natural log with a 1e-5 floor, standardized per channel.
class MelCodec {
public:
  struct Config {
    int n_fft = 1024;
    int hop = 512;
    int n_mels = kLatentChannels;
    int sample_rate = kSampleRate;
    double floor = 1e-5;
    int griffin_lim_iters = 32;
  };

  MelCodec();
  explicit MelCodec(const Config& cfg);

  const Config& config() const { return cfg_; }
  const Eigen::MatrixXd& filterbank() const { return fb_; }

  Eigen::MatrixXd log_mel(const AudioClip& clip) const;
  LatentClip encode(const AudioClip& clip, const LatentStats& stats) const;

  // Inverts the standardization and mel projection, then runs Griffin-Lim.
  AudioClip decode(const LatentClip& latent, const LatentStats& stats, std::size_t n_samples,
                   std::uint64_t phase_seed = 0) const;

  static LatentStats fit_stats(const std::vector<Eigen::MatrixXd>& log_mels);

private:
  Config cfg_;
  Eigen::MatrixXd fb_;    // n_mels x (n_fft/2 + 1)
  Eigen::MatrixXd pinv_;  // (n_fft/2 + 1) x n_mels
};

// Fast Griffin-Lim (momentum 0.99) from a magnitude spectrogram laid out as
// in stft().
std::vector<double> griffin_lim(const Eigen::MatrixXd& magnitude, int n_fft, int hop, std::size_t n_samples,
                                int iterations, std::uint64_t phase_seed = 0);

}  // namespace afe
