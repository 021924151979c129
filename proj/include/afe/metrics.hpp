#pragma once

#include <vector>

#include "afe/adaptive.hpp"

namespace afe {

// Same computation as editability_score, reported as an evaluation metric.
double alignment_score(const EmbeddingOracle& oracle, const AudioClip& audio, const ControlTrack& visual);

struct StructureDistance {
  double envelope_correlation = 0.0;
  double log_spectral_distance = 0.0;  // dB
  bool degenerate = false;             // an envelope had zero variance
};

// Pearson correlation of the level-0 loudness curves and the frame-averaged
// RMS difference of the dB magnitude spectra.
StructureDistance structure_distance(const AudioClip& source, const AudioClip& edited);

// Cuts the clip into 5 equal sub-clips and returns the best cosine
// similarity to the prompt embedding.
inline constexpr int kFidelitySubclips = 5;
double prompt_fidelity(const EmbeddingOracle& oracle, const AudioClip& audio, const PromptLabel& prompt);
std::vector<double> subclip_similarities(const EmbeddingOracle& oracle, const AudioClip& audio,
                                         const PromptLabel& prompt);

// Pearson correlation; returns 0 and sets degenerate when either input is constant.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool* degenerate = nullptr);

struct PairedTest {
  double mean_difference = 0.0;
  double t = 0.0;
  int df = 0;
  double p_value = 1.0;  // one-sided, H1: mean(a - b) > 0
  std::size_t n = 0;
};

PairedTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace afe
