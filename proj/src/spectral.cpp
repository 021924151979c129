#include "afe/spectral.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "afe/errors.hpp"

namespace afe {

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

namespace {

Eigen::FFT<double>& local_fft() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    return f;
  }();
  return fft;
}

}  // namespace

Eigen::MatrixXcd stft(std::span<const double> samples, int n_fft, int hop) {
  if (n_fft <= 0 || hop <= 0 || (n_fft & 1)) throw InvalidInput("stft: bad n_fft or hop");
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  const std::ptrdiff_t frames = n / hop;
  const int bins = n_fft / 2 + 1;
  const auto window = hann_window(n_fft);
  auto& fft = local_fft();

  Eigen::MatrixXcd out(bins, frames);
  std::vector<double> buf(static_cast<std::size_t>(n_fft));
  std::vector<std::complex<double>> spec;
  for (std::ptrdiff_t t = 0; t < frames; ++t) {
    const std::ptrdiff_t start = t * hop - n_fft / 2;
    for (int i = 0; i < n_fft; ++i) {
      const std::ptrdiff_t k = start + i;
      buf[static_cast<std::size_t>(i)] =
          (k >= 0 && k < n) ? samples[static_cast<std::size_t>(k)] * window[static_cast<std::size_t>(i)] : 0.0;
    }
    fft.fwd(spec, buf);
    for (int b = 0; b < bins; ++b) out(b, t) = spec[static_cast<std::size_t>(b)];
  }
  return out;
}

std::vector<double> istft(const Eigen::MatrixXcd& spec, int n_fft, int hop, std::size_t n_samples) {
  const int bins = n_fft / 2 + 1;
  if (spec.rows() != bins) throw InvalidInput("istft: bin count does not match n_fft");
  const auto window = hann_window(n_fft);
  auto& fft = local_fft();

  std::vector<double> out(n_samples, 0.0), norm(n_samples, 0.0);
  std::vector<std::complex<double>> half(static_cast<std::size_t>(bins));
  std::vector<double> frame;
  const auto n = static_cast<std::ptrdiff_t>(n_samples);
  for (Eigen::Index t = 0; t < spec.cols(); ++t) {
    for (int b = 0; b < bins; ++b) half[static_cast<std::size_t>(b)] = spec(b, t);
    fft.inv(frame, half, static_cast<Eigen::Index>(n_fft));
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t) * hop - n_fft / 2;
    for (int i = 0; i < n_fft; ++i) {
      const std::ptrdiff_t k = start + i;
      if (k < 0 || k >= n) continue;
      const double w = window[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(k)] += w * frame[static_cast<std::size_t>(i)];
      norm[static_cast<std::size_t>(k)] += w * w;
    }
  }
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (norm[i] > 1e-8) out[i] /= norm[i];
  }
  return out;
}

}  // namespace afe
