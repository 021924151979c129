#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "afe/adaptive.hpp"
#include "afe/metrics.hpp"
#include "afe/model.hpp"

namespace afe {

// How the level of detail of one edit is chosen.
enum class LevelMode {
  Adaptive,  // plan_edit with l_max = value
  Fixed,     // level = value
  FullMask,  // no acoustic features at all (video-to-audio mode)
};

struct LevelChoice {
  LevelMode mode = LevelMode::Adaptive;
  int value = kDefaultMaxLevel;
};

struct EditSettings {
  SamplerConfig sampler;
  GuidanceWeights guidance;
  double s_min = kDefaultScoreMin;
  double s_max = kDefaultScoreMax;
};

struct EditOutcome {
  AudioClip audio;
  LatentClip latent;
  EditPlan plan;
  bool adaptive = true;
  int level = 0;  // -1 for the full mask
};

// Source audio + target condition -> features at the chosen level ->
// guided sampling -> Griffin-Lim resynthesis. The phase seed is derived
// from the sampler seed.
EditOutcome edit_audio(const VelocityModel& model, const MelCodec& codec, const EmbeddingOracle& oracle,
                       const AudioClip& source, const ControlTrack& target_control, int target_class,
                       const LevelChoice& choice, const EditSettings& settings);

// Source scene and edit target. Easy edits reuse the source envelope for
// the target track; hard edits draw a fresh one.
struct EditInstance {
  std::string id;
  SceneSpec source;
  SceneSpec target;
  bool easy = false;
  std::uint64_t noise_seed = 0;
};

std::vector<EditInstance> make_edit_set(int n, std::uint64_t seed);

struct RowSpec {
  LevelMode mode = LevelMode::Adaptive;
  int value = 0;

  std::string label() const;  // "ac_lmax3", "fixed2", "v2a"
};

struct ExperimentVariant {
  std::string label;
  const VelocityModel* model = nullptr;
  std::vector<RowSpec> rows;  // empty means ExperimentConfig::default_rows()
};

struct ExperimentConfig {
  int n_edits = 64;
  std::uint64_t seed = 0;
  std::vector<int> sweep = {0, 1, 2, 3};
  std::vector<int> fixed_levels = {0, 1, 2, 3};
  bool v2a = true;
  EditSettings settings;
  int jobs = 1;
  std::string config_fingerprint;

  std::vector<RowSpec> default_rows() const;
};

struct MetricRow {
  std::string variant;
  std::string row;
  std::string instance;
  std::size_t index = 0;
  bool easy = false;
  int source_class = 0;
  int target_class = 0;
  int level = 0;
  double score = 0.0;
  double alignment = 0.0;
  double envelope_correlation = 0.0;
  double log_spectral_distance = 0.0;
  bool degenerate = false;
  double prompt_fidelity = 0.0;
};

struct AggregateRow {
  std::string variant;
  std::string row;
  std::size_t n = 0;
  double mean_level = 0.0;
  double alignment = 0.0;
  double envelope_correlation = 0.0;
  double log_spectral_distance = 0.0;
  double prompt_fidelity = 0.0;
};

inline constexpr int kReportSchemaVersion = 1;

struct MetricReport {
  int schema_version = kReportSchemaVersion;
  std::string config_fingerprint;
  std::vector<MetricRow> rows;
  std::vector<AggregateRow> aggregates;

  // Per-instance values of one (variant, row) pair, ordered by instance index.
  std::vector<double> values(const std::string& variant, const std::string& row, double MetricRow::*field) const;
  std::vector<double> levels(const std::string& variant, const std::string& row) const;
};

std::vector<AggregateRow> aggregate(const std::vector<MetricRow>& rows);

MetricReport run_experiment(const ExperimentConfig& cfg, const std::vector<ExperimentVariant>& variants,
                            const MelCodec& codec, const EmbeddingOracle& oracle);

void save_report_json(const std::filesystem::path& path, const MetricReport& report);
// Tradeoff table: one line per aggregate row.
void save_report_csv(const std::filesystem::path& path, const MetricReport& report);

}  // namespace afe
