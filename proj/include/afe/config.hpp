#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "afe/augment.hpp"
#include "afe/experiment.hpp"
#include "afe/train.hpp"

namespace afe {

struct RunConfig {
  std::uint64_t seed = 0;
  int jobs = 0;  // 0 = available cores

  int corpus_size = 200;

  FeatureConfig features;
  int max_level = kDefaultMaxLevel;

  AugmentPolicy augment;
  ModelConfig model;
  TrainSchedule schedule;

  SamplerConfig sampler;
  GuidanceWeights guidance;

  int adaptive_l_max = kDefaultMaxLevel;
  double s_min = kDefaultScoreMin;
  double s_max = kDefaultScoreMax;
  std::string oracle = "fingerprint";
  std::string oracle_sidecar;

  int eval_edits = 64;
  std::vector<int> eval_sweep = {0, 1, 2, 3};
  std::vector<int> eval_fixed_levels = {0, 1, 2, 3};
  bool eval_v2a = true;

  // Copies max_level into the model and augment sections and checks ranges.
  void validate() const;
  void sync();
  int effective_jobs() const;

  // Sorted "section.key = value" lines covering every key.
  std::string canonical() const;
  // 16 hex digits of FNV-1a 64 over canonical().
  std::string fingerprint() const;
};

// Keys accepted in a config file or by set_config_value, with their
// current values ("section.key").
std::vector<std::string> config_keys();
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

// TOML-style text: [section] headers, key = value lines, '#' comments,
// optionally quoted strings and [a, b] lists. Unknown keys are rejected.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace afe
