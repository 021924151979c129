#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "afe/scene.hpp"

namespace afe {

struct CorpusEntry {
  std::string id;
  std::string wav_path;      // relative to the manifest directory
  std::string control_path;  // relative to the manifest directory
  int class_id = 0;
  std::uint64_t seed = 0;
  std::string split;         // "train" or "val"
};

struct CorpusManifest {
  std::vector<CorpusEntry> entries;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::filesystem::path root;  // directory holding the manifest; not serialized
};

inline constexpr double kValFraction = 0.1;

// Scene seeds, class ids and the split as pure functions of (n, split_seed).
// Classes are dealt round-robin and shuffled so every class appears
// floor(n/8) or ceil(n/8) times.
std::vector<CorpusEntry> plan_corpus(int n, std::uint64_t split_seed);

// Renders and writes n scenes plus manifest.json under out_dir.
CorpusManifest make_corpus(int n, std::uint64_t split_seed, const std::filesystem::path& out_dir,
                           const std::string& config_fingerprint = {});

void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);
CorpusManifest load_manifest(const std::filesystem::path& path);

void save_control_json(const std::filesystem::path& path, const ControlTrack& track);
ControlTrack load_control_json(const std::filesystem::path& path);

// Loaded audio + control pair of one manifest entry.
struct CorpusItem {
  CorpusEntry entry;
  AudioClip audio;
  ControlTrack control;
};
std::vector<CorpusItem> load_corpus(const CorpusManifest& manifest, const std::string& split = {});

}  // namespace afe
