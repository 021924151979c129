#include "afe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "afe/errors.hpp"
#include "afe/features.hpp"

namespace afe {

double alignment_score(const EmbeddingOracle& oracle, const AudioClip& audio, const ControlTrack& visual) {
  return editability_score(oracle, audio, visual);
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool* degenerate) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidInput("pearson: inputs must have equal length >= 2");
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double va = da.square().sum();
  const double vb = db.square().sum();
  if (degenerate) *degenerate = false;
  if (!(va > 0.0) || !(vb > 0.0)) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return std::clamp((da * db).sum() / std::sqrt(va * vb), -1.0, 1.0);
}

namespace {
constexpr double kLogEps = 1e-5;
}  // namespace

StructureDistance structure_distance(const AudioClip& source, const AudioClip& edited) {
  if (source.samples.size() != edited.samples.size() || source.sample_rate != edited.sample_rate) {
    throw InvalidInput("structure_distance: clips differ in length or rate");
  }
  const MagnitudeSpectrogram ms = stft_magnitude(source);
  const MagnitudeSpectrogram me = stft_magnitude(edited);
  const Eigen::VectorXd ea = loudness_hierarchy(ms, 0).levels[0].row(0).transpose();
  const Eigen::VectorXd eb = loudness_hierarchy(me, 0).levels[0].row(0).transpose();

  StructureDistance d;
  d.envelope_correlation = pearson(ea, eb, &d.degenerate);
  if (!d.degenerate && source.samples == edited.samples) d.envelope_correlation = 1.0;

  const Eigen::ArrayXXd la = 20.0 * (ms.values.array() + kLogEps).log10();
  const Eigen::ArrayXXd lb = 20.0 * (me.values.array() + kLogEps).log10();
  const Eigen::ArrayXd per_frame = (la - lb).square().colwise().mean().sqrt().transpose();
  d.log_spectral_distance = per_frame.mean();
  return d;
}

std::vector<double> subclip_similarities(const EmbeddingOracle& oracle, const AudioClip& audio,
                                         const PromptLabel& prompt) {
  const std::size_t len = audio.samples.size() / kFidelitySubclips;
  if (len == 0) throw InvalidInput("prompt_fidelity: clip too short");
  const Eigen::VectorXd p = oracle.embed_prompt(prompt);
  std::vector<double> sims;
  for (int i = 0; i < kFidelitySubclips; ++i) {
    const AudioClip sub = audio.slice(static_cast<std::size_t>(i) * len, len);
    sims.push_back(oracle.embed_audio(sub, static_cast<std::size_t>(i)).dot(p));
  }
  return sims;
}

double prompt_fidelity(const EmbeddingOracle& oracle, const AudioClip& audio, const PromptLabel& prompt) {
  const auto sims = subclip_similarities(oracle, audio, prompt);
  return *std::max_element(sims.begin(), sims.end());
}

PairedTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidInput("paired_t_test: need two equal samples of size >= 2");
  PairedTest r;
  r.n = a.size();
  r.df = static_cast<int>(a.size()) - 1;
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(a.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += std::pow(a[i] - b[i] - mean, 2);
  const double sd = std::sqrt(ss / r.df);
  r.mean_difference = mean;
  if (!(sd > 0.0)) {
    r.t = mean > 0.0 ? std::numeric_limits<double>::infinity() : (mean < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
    r.p_value = mean > 0.0 ? 0.0 : 1.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(a.size())));
  const boost::math::students_t dist(r.df);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.t));
  return r;
}

}  // namespace afe
