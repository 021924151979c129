#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "afe/audio.hpp"

namespace afe {

struct FeatureConfig {
  int n_fft = 1024;
  int hop = 256;
  int median_kernel = 5;  // odd; 1 disables smoothing
  double eps = 1e-5;
};

inline constexpr int kDefaultMaxLevel = 3;

// F x T_a magnitudes; the Nyquist bin is dropped so F = n_fft / 2.
struct MagnitudeSpectrogram {
  Eigen::MatrixXd values;
  std::vector<double> bin_freqs;
  double hop_s = 0.0;

  Eigen::Index bins() const { return values.rows(); }
  Eigen::Index frames() const { return values.cols(); }
};

// A-weighted loudness of recursively halved sub-bands. levels[l] is a
// 2^l x T_a matrix in dB (median-smoothed); linear[l] holds the raw
// weighted band sums before the eps floor and smoothing.
struct LoudnessHierarchy {
  std::vector<Eigen::MatrixXd> levels;
  std::vector<Eigen::MatrixXd> linear;
  double eps = 1e-5;

  int max_level() const { return static_cast<int>(levels.size()) - 1; }
  Eigen::Index frames() const { return levels.empty() ? 0 : levels.front().cols(); }
};

// masks[l] is 2^l x T_a with entries in {0, 1}.
struct DetailMask {
  std::vector<Eigen::MatrixXd> masks;

  int max_level() const { return static_cast<int>(masks.size()) - 1; }
  Eigen::Index frames() const { return masks.empty() ? 0 : masks.front().cols(); }

  // Levels 0..level active, finer levels zero.
  static DetailMask pure(int level, int max_level, Eigen::Index frames);
  // Every level inactive: the null acoustic condition.
  static DetailMask none(int max_level, Eigen::Index frames);
};

// Channel layout: for l = 0..L_max, 2^l value rows then 2^l indicator rows.
struct AcousticFeatures {
  Eigen::MatrixXd channels;
  int max_level = kDefaultMaxLevel;

  Eigen::Index frames() const { return channels.cols(); }
  static Eigen::Index channel_count(int max_level) { return 2 * ((Eigen::Index{1} << (max_level + 1)) - 1); }
  static Eigen::Index level_offset(int level) { return 2 * ((Eigen::Index{1} << level) - 1); }
  static AcousticFeatures null(int max_level, Eigen::Index frames);
  bool is_null() const { return channels.isZero(0.0); }
};

MagnitudeSpectrogram stft_magnitude(const AudioClip& clip, const FeatureConfig& cfg = {});

// Standard A-weighting response normalized to 1 at 1 kHz, as linear gains.
double a_weight_gain(double freq_hz);
std::vector<double> a_weight_gains(std::span<const double> bin_freqs);

// Running median along time with replicated edges.
Eigen::MatrixXd median_filter_rows(const Eigen::MatrixXd& x, int kernel);

LoudnessHierarchy loudness_hierarchy(const MagnitudeSpectrogram& spec, int max_level,
                                     const FeatureConfig& cfg = {});

AcousticFeatures assemble_features(const LoudnessHierarchy& h, const DetailMask& mask);

AcousticFeatures extract(const AudioClip& clip, int level, int max_level = kDefaultMaxLevel,
                         const FeatureConfig& cfg = {});

// Flat dump: three little-endian uint32 {channels, frames, max_level},
// then channels x frames float32 values, row-major.
void save_features_binary(const std::filesystem::path& path, const AcousticFeatures& f);
AcousticFeatures load_features_binary(const std::filesystem::path& path);
void save_features_json(const std::filesystem::path& path, const AcousticFeatures& f);

}  // namespace afe
