#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "afe/flow.hpp"
#include "afe/scene.hpp"

namespace afe {

inline constexpr int kEmbeddingDim = 8;
inline constexpr double kScoreWindowSeconds = 2.0;
inline constexpr double kDefaultScoreMin = 0.02;
inline constexpr double kDefaultScoreMax = 0.32;

// Shared embedding space for audio windows, control-track windows and
// prompts. All outputs are unit vectors of length dim().
class EmbeddingOracle {
public:
  virtual ~EmbeddingOracle() = default;
  virtual int dim() const { return kEmbeddingDim; }
  virtual double window_s() const { return kScoreWindowSeconds; }
  // index is the window's position in the clip; content-based oracles ignore it.
  virtual Eigen::VectorXd embed_audio(const AudioClip& window, std::size_t index) const = 0;
  virtual Eigen::VectorXd embed_visual(const ControlTrack& segment, std::size_t index) const = 0;
  virtual Eigen::VectorXd embed_prompt(const PromptLabel& prompt) const = 0;
};

// Band-energy fingerprints. Band 0 spans 0-250 Hz; bands 1-7 split
// 250-8000 Hz into log-spaced octave-sized bands.
class FingerprintOracle : public EmbeddingOracle {
public:
  FingerprintOracle();

  static const std::array<double, kEmbeddingDim + 1>& band_edges();
  // Unit-normalized band energies; silence maps to the uniform vector.
  Eigen::VectorXd band_energy(const AudioClip& window) const;
  const Eigen::VectorXd& class_template(int class_id) const { return templates_.at(static_cast<std::size_t>(class_id)); }

  Eigen::VectorXd embed_audio(const AudioClip& window, std::size_t index) const override;
  // Sum of class templates weighted by each class's mean intensity.
  Eigen::VectorXd embed_visual(const ControlTrack& segment, std::size_t index) const override;
  Eigen::VectorXd embed_prompt(const PromptLabel& prompt) const override;

private:
  std::vector<Eigen::VectorXd> templates_;
};

// Precomputed per-window embeddings from a JSON sidecar:
// {"audio": [[...], ...], "visual": [[...], ...], "prompts": {"<class>": [...]}}.
// The "prompts" table is optional.
class ExternalOracle : public EmbeddingOracle {
public:
  explicit ExternalOracle(const std::filesystem::path& sidecar);

  int dim() const override { return dim_; }
  Eigen::VectorXd embed_audio(const AudioClip& window, std::size_t index) const override;
  Eigen::VectorXd embed_visual(const ControlTrack& segment, std::size_t index) const override;
  Eigen::VectorXd embed_prompt(const PromptLabel& prompt) const override;

private:
  int dim_ = 0;
  std::vector<Eigen::VectorXd> audio_, visual_;
  std::vector<std::pair<int, Eigen::VectorXd>> prompts_;
};

const FingerprintOracle& default_oracle();
std::unique_ptr<EmbeddingOracle> make_oracle(const std::string& kind, const std::filesystem::path& sidecar = {});

struct WindowScore {
  double score = 0.0;
  std::vector<double> similarities;

  std::size_t windows() const { return similarities.size(); }
};

// Mean cosine similarity over non-overlapping windows; the trailing
// remainder shorter than a window is dropped.
WindowScore windowed_similarity(const EmbeddingOracle& oracle, const AudioClip& audio, const ControlTrack& visual);
double editability_score(const EmbeddingOracle& oracle, const AudioClip& source, const ControlTrack& target);

// round(l_max * clamp((s - s_min) / (s_max - s_min), 0, 1)), ties away from zero.
int quantize_level(double s, double s_min, double s_max, int l_max);

struct EditPlan {
  double score = 0.0;
  int level = 0;
  int l_max = kDefaultMaxLevel;
  double s_min = kDefaultScoreMin;
  double s_max = kDefaultScoreMax;
  std::size_t windows = 0;
  GuidanceWeights guidance;
};

EditPlan plan_edit(const EmbeddingOracle& oracle, const AudioClip& source, const ControlTrack& target, int l_max,
                   const GuidanceWeights& guidance, double s_min = kDefaultScoreMin, double s_max = kDefaultScoreMax);

}  // namespace afe
