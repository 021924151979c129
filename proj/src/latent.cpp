#include "afe/latent.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "afe/errors.hpp"
#include "afe/rng.hpp"
#include "afe/spectral.hpp"

namespace afe {

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

Eigen::MatrixXd mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  const int bins = n_fft / 2 + 1;
  const double mel_hi = hz_to_mel(0.5 * sample_rate);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) edges[static_cast<std::size_t>(i)] = mel_to_hz(mel_hi * i / (n_mels + 1));
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      fb(m, b) = w;
    }
  }
  return fb;
}

}  // namespace

MelCodec::MelCodec() : MelCodec(Config{}) {}

MelCodec::MelCodec(const Config& cfg) : cfg_(cfg) {
  fb_ = mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate);
  pinv_ = fb_.completeOrthogonalDecomposition().pseudoInverse();
}

Eigen::MatrixXd MelCodec::log_mel(const AudioClip& clip) const {
  if (clip.empty()) throw InvalidInput("log_mel: empty clip");
  if (clip.sample_rate != cfg_.sample_rate) throw InvalidInput("log_mel: sample rate mismatch");
  const Eigen::MatrixXd mag = stft(clip.samples, cfg_.n_fft, cfg_.hop).cwiseAbs();
  return (fb_ * mag).array().max(cfg_.floor).log().matrix();
}

LatentClip MelCodec::encode(const AudioClip& clip, const LatentStats& stats) const {
  const Eigen::MatrixXd lm = log_mel(clip);
  LatentClip out;
  out.frame_rate = static_cast<double>(cfg_.sample_rate) / cfg_.hop;
  out.values = (lm.colwise() - stats.mean).array().colwise() / stats.stddev.array();
  return out;
}

AudioClip MelCodec::decode(const LatentClip& latent, const LatentStats& stats, std::size_t n_samples,
                           std::uint64_t phase_seed) const {
  if (latent.channels() != cfg_.n_mels) throw InvalidInput("decode: latent channel count mismatch");
  const Eigen::MatrixXd lm = (latent.values.array().colwise() * stats.stddev.array()).colwise() + stats.mean.array();
  const Eigen::MatrixXd mel = lm.array().exp();
  const Eigen::MatrixXd mag = (pinv_ * mel).cwiseMax(0.0);
  AudioClip out;
  out.sample_rate = cfg_.sample_rate;
  out.samples = griffin_lim(mag, cfg_.n_fft, cfg_.hop, n_samples, cfg_.griffin_lim_iters, phase_seed);
  return out;
}

LatentStats MelCodec::fit_stats(const std::vector<Eigen::MatrixXd>& log_mels) {
  if (log_mels.empty()) throw InvalidInput("fit_stats: no data");
  const Eigen::Index D = log_mels.front().rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(D), sq = Eigen::VectorXd::Zero(D);
  double count = 0.0;
  for (const auto& m : log_mels) {
    sum += m.rowwise().sum();
    sq += m.array().square().matrix().rowwise().sum();
    count += static_cast<double>(m.cols());
  }
  LatentStats s;
  s.mean = sum / count;
  s.stddev = (sq / count - s.mean.cwiseProduct(s.mean)).cwiseMax(1e-6).cwiseSqrt();
  return s;
}

std::vector<double> griffin_lim(const Eigen::MatrixXd& magnitude, int n_fft, int hop, std::size_t n_samples,
                                int iterations, std::uint64_t phase_seed) {
  constexpr double kMomentum = 0.99;
  Rng rng(phase_seed);
  Eigen::MatrixXcd phase(magnitude.rows(), magnitude.cols());
  for (Eigen::Index c = 0; c < phase.cols(); ++c) {
    for (Eigen::Index r = 0; r < phase.rows(); ++r) {
      phase(r, c) = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
    }
  }
  Eigen::MatrixXcd prev = Eigen::MatrixXcd::Zero(magnitude.rows(), magnitude.cols());
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXcd spec = magnitude.cast<std::complex<double>>().cwiseProduct(phase);
    const auto x = istft(spec, n_fft, hop, n_samples);
    const Eigen::MatrixXcd rebuilt = stft(x, n_fft, hop);
    Eigen::MatrixXcd accel = rebuilt - (kMomentum / (1.0 + kMomentum)) * prev;
    prev = rebuilt;
    for (Eigen::Index c = 0; c < accel.cols(); ++c) {
      for (Eigen::Index r = 0; r < accel.rows(); ++r) {
        const double a = std::abs(accel(r, c));
        phase(r, c) = a > 1e-12 ? accel(r, c) / a : std::complex<double>(1.0, 0.0);
      }
    }
  }
  const Eigen::MatrixXcd spec = magnitude.cast<std::complex<double>>().cwiseProduct(phase);
  return istft(spec, n_fft, hop, n_samples);
}

}  // namespace afe
