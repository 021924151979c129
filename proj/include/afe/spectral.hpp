#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace afe {

// Periodic Hann window.
std::vector<double> hann_window(int n);

// Centered STFT with zero padding: frame t covers samples
// [t*hop - n_fft/2, t*hop + n_fft/2). Produces floor(n / hop) frames of
// n_fft/2 + 1 bins (rows = bins, cols = frames).
Eigen::MatrixXcd stft(std::span<const double> samples, int n_fft, int hop);

// Weighted overlap-add inverse of stft() (same framing), n_samples long.
std::vector<double> istft(const Eigen::MatrixXcd& spec, int n_fft, int hop, std::size_t n_samples);

}  // namespace afe
