#include "afe/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "afe/errors.hpp"
#include "afe/rng.hpp"

namespace afe {

using json = nlohmann::ordered_json;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::vector<CorpusEntry> plan_corpus(int n, std::uint64_t split_seed) {
  if (n < 1) throw InvalidInput("corpus size must be at least 1");
  std::vector<int> classes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) classes[static_cast<std::size_t>(i)] = i % kNumClasses;
  Rng rng(derive_seed(split_seed, "classes"));
  std::shuffle(classes.begin(), classes.end(), rng.engine());

  const std::uint64_t scene_root = derive_seed(split_seed, "scenes");
  const std::uint64_t split_root = derive_seed(split_seed, "split");
  std::vector<CorpusEntry> entries;
  entries.reserve(classes.size());
  for (int i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "scene_%05d", i);
    CorpusEntry e;
    e.id = id;
    e.wav_path = std::string(id) + ".wav";
    e.control_path = std::string(id) + ".control.json";
    e.class_id = classes[static_cast<std::size_t>(i)];
    e.seed = derive_seed(scene_root, static_cast<std::uint64_t>(i));
    const double u = static_cast<double>(derive_seed(split_root, static_cast<std::uint64_t>(i)) >> 11) * 0x1.0p-53;
    e.split = u < kValFraction ? "val" : "train";
    entries.push_back(std::move(e));
  }
  return entries;
}

CorpusManifest make_corpus(int n, std::uint64_t split_seed, const std::filesystem::path& out_dir,
                           const std::string& config_fingerprint) {
  CorpusManifest manifest;
  manifest.entries = plan_corpus(n, split_seed);
  manifest.seed = split_seed;
  manifest.config_fingerprint = config_fingerprint;
  manifest.root = out_dir;

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  for (const auto& e : manifest.entries) {
    const Scene scene = synth_scene(random_scene_spec(e.class_id, e.seed));
    save_wav(out_dir / e.wav_path, scene.audio);
    save_control_json(out_dir / e.control_path, scene.control);
  }
  save_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
  json j;
  j["config_fingerprint"] = manifest.config_fingerprint;
  j["seed"] = manifest.seed;
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"id", e.id},
                       {"wav_path", e.wav_path},
                       {"control_path", e.control_path},
                       {"class_id", e.class_id},
                       {"seed", e.seed},
                       {"split", e.split}});
  }
  j["entries"] = std::move(entries);
  write_text(path, j.dump(2) + "\n");
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  const json j = read_json(path);
  CorpusManifest m;
  m.root = path.parent_path();
  try {
    m.config_fingerprint = j.value("config_fingerprint", std::string{});
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& e : j.at("entries")) {
      CorpusEntry c;
      c.id = e.at("id").get<std::string>();
      c.wav_path = e.at("wav_path").get<std::string>();
      c.control_path = e.at("control_path").get<std::string>();
      c.class_id = e.at("class_id").get<int>();
      c.seed = e.at("seed").get<std::uint64_t>();
      c.split = e.at("split").get<std::string>();
      m.entries.push_back(std::move(c));
    }
  } catch (const json::exception& ex) {
    throw FormatError(path.string() + ": " + ex.what());
  }
  return m;
}

void save_control_json(const std::filesystem::path& path, const ControlTrack& track) {
  json j;
  j["frame_rate"] = track.frame_rate;
  j["class_id"] = track.class_id;
  json frames = json::array();
  for (Eigen::Index t = 0; t < track.frames.cols(); ++t) {
    json row = json::array();
    for (Eigen::Index k = 0; k < track.frames.rows(); ++k) row.push_back(track.frames(k, t));
    frames.push_back(std::move(row));
  }
  j["frames"] = std::move(frames);
  write_text(path, j.dump() + "\n");
}

ControlTrack load_control_json(const std::filesystem::path& path) {
  const json j = read_json(path);
  ControlTrack c;
  try {
    c.frame_rate = j.at("frame_rate").get<double>();
    c.class_id = j.at("class_id").get<int>();
    const auto& frames = j.at("frames");
    c.frames = Eigen::MatrixXd::Zero(kNumClasses, static_cast<Eigen::Index>(frames.size()));
    for (std::size_t t = 0; t < frames.size(); ++t) {
      const auto& row = frames[t];
      if (row.size() != static_cast<std::size_t>(kNumClasses)) {
        throw FormatError(path.string() + ": control frame has wrong channel count");
      }
      for (int k = 0; k < kNumClasses; ++k) {
        c.frames(k, static_cast<Eigen::Index>(t)) = row[static_cast<std::size_t>(k)].get<double>();
      }
    }
  } catch (const json::exception& ex) {
    throw FormatError(path.string() + ": " + ex.what());
  }
  if (c.class_id < 0 || c.class_id >= kNumClasses || !(c.frame_rate > 0.0)) {
    throw FormatError(path.string() + ": invalid class id or frame rate");
  }
  return c;
}

std::vector<CorpusItem> load_corpus(const CorpusManifest& manifest, const std::string& split) {
  std::vector<CorpusItem> items;
  for (const auto& e : manifest.entries) {
    if (!split.empty() && e.split != split) continue;
    CorpusItem item;
    item.entry = e;
    item.audio = load_wav(manifest.root / e.wav_path);
    item.control = load_control_json(manifest.root / e.control_path);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace afe
