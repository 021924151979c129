#include "afe/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "afe/errors.hpp"
#include "afe/spectral.hpp"

namespace afe {

DetailMask DetailMask::pure(int level, int max_level, Eigen::Index frames) {
  if (max_level < 0 || level < -1 || level > max_level) throw InvalidInput("detail level out of range");
  DetailMask m;
  for (int l = 0; l <= max_level; ++l) {
    const Eigen::Index rows = Eigen::Index{1} << l;
    m.masks.push_back(l <= level ? Eigen::MatrixXd::Ones(rows, frames) : Eigen::MatrixXd::Zero(rows, frames));
  }
  return m;
}

DetailMask DetailMask::none(int max_level, Eigen::Index frames) { return pure(-1, max_level, frames); }

AcousticFeatures AcousticFeatures::null(int max_level, Eigen::Index frames) {
  return {Eigen::MatrixXd::Zero(channel_count(max_level), frames), max_level};
}

MagnitudeSpectrogram stft_magnitude(const AudioClip& clip, const FeatureConfig& cfg) {
  if (clip.empty()) throw InvalidInput("stft_magnitude: empty clip");
  if (clip.sample_rate != kSampleRate) throw InvalidInput("stft_magnitude: expected 16 kHz audio");
  const Eigen::MatrixXcd s = stft(clip.samples, cfg.n_fft, cfg.hop);
  const int bins = cfg.n_fft / 2;
  MagnitudeSpectrogram out;
  out.values = s.topRows(bins).cwiseAbs();
  out.bin_freqs.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    out.bin_freqs[static_cast<std::size_t>(b)] = static_cast<double>(b) * clip.sample_rate / cfg.n_fft;
  }
  out.hop_s = static_cast<double>(cfg.hop) / clip.sample_rate;
  return out;
}

namespace {

double a_weight_response(double f) {
  const double f2 = f * f;
  const double num = 12194.0 * 12194.0 * f2 * f2;
  const double den = (f2 + 20.6 * 20.6) * std::sqrt((f2 + 107.7 * 107.7) * (f2 + 737.9 * 737.9)) *
                     (f2 + 12194.0 * 12194.0);
  return num / den;
}

}  // namespace

double a_weight_gain(double freq_hz) {
  if (freq_hz <= 0.0) return 0.0;
  static const double ref = a_weight_response(1000.0);
  return a_weight_response(freq_hz) / ref;
}

std::vector<double> a_weight_gains(std::span<const double> bin_freqs) {
  std::vector<double> g(bin_freqs.size());
  std::transform(bin_freqs.begin(), bin_freqs.end(), g.begin(), a_weight_gain);
  return g;
}

Eigen::MatrixXd median_filter_rows(const Eigen::MatrixXd& x, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw InvalidInput("median kernel must be odd and positive");
  if (kernel == 1 || x.cols() == 0) return x;
  const int half = kernel / 2;
  const Eigen::Index n = x.cols();
  Eigen::MatrixXd out(x.rows(), n);
  std::vector<double> win(static_cast<std::size_t>(kernel));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index t = 0; t < n; ++t) {
      for (int k = -half; k <= half; ++k) {
        const Eigen::Index idx = std::clamp<Eigen::Index>(t + k, 0, n - 1);
        win[static_cast<std::size_t>(k + half)] = x(r, idx);
      }
      std::nth_element(win.begin(), win.begin() + half, win.end());
      out(r, t) = win[static_cast<std::size_t>(half)];
    }
  }
  return out;
}

LoudnessHierarchy loudness_hierarchy(const MagnitudeSpectrogram& spec, int max_level, const FeatureConfig& cfg) {
  if (max_level < 0) throw InvalidInput("max level must be non-negative");
  const Eigen::Index F = spec.bins();
  if (F == 0 || F % (Eigen::Index{1} << max_level) != 0) {
    throw InvalidInput("bin count not divisible by 2^max_level");
  }
  const auto gains = a_weight_gains(spec.bin_freqs);
  const Eigen::Map<const Eigen::VectorXd> g(gains.data(), F);
  const Eigen::MatrixXd weighted = spec.values.array().colwise() * g.array();

  LoudnessHierarchy h;
  h.eps = cfg.eps;
  std::vector<Eigen::MatrixXd> linear;
  for (int l = 0; l <= max_level; ++l) {
    const Eigen::Index bands = Eigen::Index{1} << l;
    const Eigen::Index width = F / bands;
    Eigen::MatrixXd sums(bands, spec.frames());
    for (Eigen::Index i = 0; i < bands; ++i) sums.row(i) = weighted.middleRows(i * width, width).colwise().sum();
    linear.push_back(std::move(sums));
  }
  for (int l = 0; l <= max_level; ++l) {
    const auto& lin = linear[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd db = 20.0 * (lin.array() + cfg.eps).log10();
    h.levels.push_back(median_filter_rows(db, cfg.median_kernel));
  }
  h.linear = std::move(linear);
  return h;
}

AcousticFeatures assemble_features(const LoudnessHierarchy& h, const DetailMask& mask) {
  if (h.levels.empty()) throw InvalidInput("empty loudness hierarchy");
  if (mask.masks.size() != h.levels.size()) throw InvalidInput("mask levels do not match hierarchy levels");
  const int L = h.max_level();
  const Eigen::Index T = h.frames();
  AcousticFeatures out{Eigen::MatrixXd::Zero(AcousticFeatures::channel_count(L), T), L};
  for (int l = 0; l <= L; ++l) {
    const auto& a = h.levels[static_cast<std::size_t>(l)];
    const auto& m = mask.masks[static_cast<std::size_t>(l)];
    if (m.rows() != a.rows() || m.cols() != T) throw InvalidInput("mask shape mismatch at level " + std::to_string(l));
    const Eigen::Index off = AcousticFeatures::level_offset(l);
    out.channels.middleRows(off, a.rows()) = a.cwiseProduct(m);
    out.channels.middleRows(off + a.rows(), a.rows()) = m;
  }
  return out;
}

AcousticFeatures extract(const AudioClip& clip, int level, int max_level, const FeatureConfig& cfg) {
  if (level < 0 || level > max_level) throw InvalidInput("detail level out of range");
  const auto h = loudness_hierarchy(stft_magnitude(clip, cfg), max_level, cfg);
  return assemble_features(h, DetailMask::pure(level, max_level, h.frames()));
}

void save_features_binary(const std::filesystem::path& path, const AcousticFeatures& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(f.channels.rows()),
                                   static_cast<std::uint32_t>(f.channels.cols()),
                                   static_cast<std::uint32_t>(f.max_level)};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  for (Eigen::Index r = 0; r < f.channels.rows(); ++r) {
    for (Eigen::Index c = 0; c < f.channels.cols(); ++c) {
      const float v = static_cast<float>(f.channels(r, c));
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

AcousticFeatures load_features_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::uint32_t header[3];
  if (!in.read(reinterpret_cast<char*>(header), sizeof header)) throw FormatError("truncated feature header");
  AcousticFeatures f;
  f.max_level = static_cast<int>(header[2]);
  if (header[0] != AcousticFeatures::channel_count(f.max_level)) throw FormatError("feature channel count mismatch");
  f.channels.resize(header[0], header[1]);
  for (Eigen::Index r = 0; r < f.channels.rows(); ++r) {
    for (Eigen::Index c = 0; c < f.channels.cols(); ++c) {
      float v;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("truncated feature data");
      f.channels(r, c) = v;
    }
  }
  return f;
}

void save_features_json(const std::filesystem::path& path, const AcousticFeatures& f) {
  nlohmann::ordered_json j;
  j["channels"] = f.channels.rows();
  j["frames"] = f.channels.cols();
  j["l_max"] = f.max_level;
  auto data = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < f.channels.rows(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < f.channels.cols(); ++c) row.push_back(f.channels(r, c));
    data.push_back(std::move(row));
  }
  j["data"] = std::move(data);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << "\n";
}

}  // namespace afe
