#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "afe/config.hpp"
#include "afe/errors.hpp"
#include "afe/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kIo = 3, kDiverged = 4 };

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Config file (default: $AFE_CONFIG)");
  cmd->add_option("--set", c.overrides, "Override a config key, e.g. --set model.total_steps=500 (repeatable)");
  cmd->add_option("--seed", c.seed, "Root seed (run.seed)");
  cmd->add_option("--jobs", c.jobs, "Worker threads (run.jobs; default: available cores)");
}

afe::RunConfig resolve_config(const Common& c) {
  afe::RunConfig cfg;
  std::string path = c.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("AFE_CONFIG")) path = env;
  }
  if (!path.empty()) cfg = afe::load_config(path);
  bool level_override = false;
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw afe::ConfigError("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    afe::set_config_value(cfg, key, kv.substr(eq + 1));
    level_override |= key == "features.l_max";
  }
  if (level_override && cfg.augment.max_level() != cfg.max_level) cfg.augment.level_distribution.clear();
  if (c.seed) cfg.seed = *c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  cfg.sync();
  cfg.validate();
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw afe::IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw afe::IoError("write failed: " + path.string());
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw afe::IoError("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(afe::fnv1a64(bytes)));
  return buf;
}

fs::path sidecar_path(const fs::path& artifact) {
  fs::path p = artifact;
  p.replace_extension(".json");
  if (p == artifact) p += ".meta.json";
  return p;
}

std::unique_ptr<afe::EmbeddingOracle> oracle_for(const afe::RunConfig& cfg) {
  return afe::make_oracle(cfg.oracle, cfg.oracle_sidecar);
}

afe::AudioClip load_segment(const fs::path& path, std::size_t n_samples) {
  afe::AudioClip clip = afe::load_wav(path);
  if (clip.sample_rate != afe::kSampleRate) clip = afe::resample(clip, afe::kSampleRate);
  if (clip.samples.size() < n_samples) {
    throw afe::InvalidInput(path.string() + " is shorter than " + std::to_string(n_samples) + " samples at 16 kHz");
  }
  clip.samples.resize(n_samples);
  return clip;
}

afe::VelocityModel load_model(const fs::path& path, const afe::RunConfig& cfg) {
  if (!fs::exists(path)) throw afe::ConfigError("checkpoint not found: " + path.string());
  return afe::load_checkpoint(path, cfg.model);
}

json plan_json(const afe::EditPlan& p) {
  return {{"score", p.score},       {"level", p.level}, {"l_max", p.l_max},
          {"s_min", p.s_min},       {"s_max", p.s_max}, {"windows", p.windows},
          {"guidance", {{"w1", p.guidance.w1}, {"w2", p.guidance.w2}}}};
}

// ---- synth

struct SynthArgs {
  Common common;
  std::string out;
  std::optional<int> n;
};

int cmd_synth(const SynthArgs& a) {
  afe::RunConfig cfg = resolve_config(a.common);
  if (a.n) cfg.corpus_size = *a.n;
  cfg.validate();
  fs::create_directories(a.out);
  const auto manifest =
      afe::make_corpus(cfg.corpus_size, afe::derive_seed(cfg.seed, "corpus"), a.out, cfg.fingerprint());
  std::cout << "wrote " << manifest.entries.size() << " scenes to " << a.out << "\n";
  return kOk;
}

// ---- features

struct FeaturesArgs {
  Common common;
  std::string in, out;
  int level = afe::kDefaultMaxLevel;
  std::string format = "bin";
};

int cmd_features(const FeaturesArgs& a) {
  const afe::RunConfig cfg = resolve_config(a.common);
  afe::AudioClip clip = afe::load_wav(a.in);
  if (clip.sample_rate != afe::kSampleRate) clip = afe::resample(clip, afe::kSampleRate);
  const auto feats = afe::extract(clip, a.level, cfg.max_level, cfg.features);
  if (a.format == "json") {
    afe::save_features_json(a.out, feats);
  } else {
    afe::save_features_binary(a.out, feats);
  }
  write_json(fs::path(a.out + ".meta.json"),
             {{"source", a.in}, {"level", a.level}, {"l_max", cfg.max_level}, {"channels", feats.channels.rows()},
              {"frames", feats.frames()}, {"config_fingerprint", cfg.fingerprint()}, {"seed", cfg.seed}});
  return kOk;
}

// ---- train

struct TrainArgs {
  Common common;
  std::string corpus, out;
  std::optional<int> steps;
};

int cmd_train(const TrainArgs& a) {
  afe::RunConfig cfg = resolve_config(a.common);
  if (a.steps) cfg.schedule.total_steps = *a.steps;
  cfg.validate();
  fs::path manifest_path = a.corpus;
  if (fs::is_directory(manifest_path)) manifest_path /= "manifest.json";
  const auto manifest = afe::load_manifest(manifest_path);
  const auto items = afe::load_corpus(manifest, "train");
  const afe::MelCodec codec;
  const auto set = afe::build_training_set(items, codec, cfg.max_level, nullptr, cfg.features);

  afe::VelocityModel model(cfg.model, afe::derive_seed(cfg.seed, "model"));
  const fs::path out = a.out;
  auto hook = [&](int step, const afe::VelocityModel& m) {
    afe::save_checkpoint(m, out);
    std::cerr << "step " << step << ": checkpoint written\n";
  };
  afe::TrainResult result;
  try {
    result = afe::train(model, set, cfg.schedule, cfg.augment, cfg.effective_jobs(), hook);
  } catch (const afe::DivergenceError&) {
    std::cerr << "training diverged; " << (fs::exists(out) ? "last periodic checkpoint kept at " + out.string()
                                                          : std::string("no checkpoint was written"))
              << "\n";
    throw;
  }
  afe::save_checkpoint(model, out);
  write_json(sidecar_path(out), {{"config_fingerprint", cfg.fingerprint()},
                                 {"seed", cfg.seed},
                                 {"corpus_digest", file_digest(manifest_path)},
                                 {"train_clips", set.size()},
                                 {"total_steps", cfg.schedule.total_steps},
                                 {"first_modulation_update", result.first_modulation_update},
                                 {"loss_trace", result.loss_trace}});
  if (!result.loss_trace.empty()) {
    std::cout << "trained " << result.loss_trace.size() << " steps, final loss " << result.loss_trace.back() << "\n";
  }
  return kOk;
}

// ---- edit

struct EditArgs {
  Common common;
  std::string checkpoint, source, control, out;
  int target_class = -1;
  std::optional<int> level;
  bool full_mask = false;
};

int cmd_edit(const EditArgs& a) {
  const afe::RunConfig cfg = resolve_config(a.common);
  const afe::VelocityModel model = load_model(a.checkpoint, cfg);
  const afe::MelCodec codec;
  const auto oracle = oracle_for(cfg);
  const std::size_t n = static_cast<std::size_t>(cfg.model.latent_frames) * codec.config().hop;
  const afe::AudioClip source = load_segment(a.source, n);
  const afe::ControlTrack control = afe::load_control_json(a.control);
  const int cls = a.target_class >= 0 ? a.target_class : control.class_id;

  afe::LevelChoice choice{afe::LevelMode::Adaptive, cfg.adaptive_l_max};
  if (a.full_mask) choice = {afe::LevelMode::FullMask, 0};
  else if (a.level) choice = {afe::LevelMode::Fixed, *a.level};
  afe::EditSettings settings;
  settings.sampler = cfg.sampler;
  settings.sampler.seed = afe::derive_seed(cfg.seed, "sampling");
  settings.guidance = cfg.guidance;
  settings.s_min = cfg.s_min;
  settings.s_max = cfg.s_max;

  const auto res = afe::edit_audio(model, codec, *oracle, source, control, cls, choice, settings);
  afe::save_wav(a.out, res.audio);
  write_json(sidecar_path(a.out), {{"plan", plan_json(res.plan)},
                                   {"ac", res.adaptive},
                                   {"v2a", a.full_mask},
                                   {"level", res.level},
                                   {"target_class", cls},
                                   {"config_fingerprint", cfg.fingerprint()},
                                   {"seed", cfg.seed}});
  std::cout << "edited " << a.source << " -> " << a.out << " (level " << res.level << ")\n";
  return kOk;
}

// ---- score

struct ScoreArgs {
  Common common;
  std::string source, control;
};

int cmd_score(const ScoreArgs& a) {
  const afe::RunConfig cfg = resolve_config(a.common);
  const auto oracle = oracle_for(cfg);
  afe::AudioClip source = afe::load_wav(a.source);
  if (source.sample_rate != afe::kSampleRate) source = afe::resample(source, afe::kSampleRate);
  const afe::ControlTrack control = afe::load_control_json(a.control);
  const auto plan = afe::plan_edit(*oracle, source, control, cfg.adaptive_l_max, cfg.guidance, cfg.s_min, cfg.s_max);
  const json j = {{"score", plan.score},       {"level", plan.level}, {"windows", plan.windows},
                  {"l_max", plan.l_max},       {"s_min", plan.s_min}, {"s_max", plan.s_max},
                  {"config_fingerprint", cfg.fingerprint()}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

// ---- eval

struct EvalArgs {
  Common common;
  std::string checkpoint, out, csv;
  std::vector<std::string> variants;
};

int cmd_eval(const EvalArgs& a) {
  const afe::RunConfig cfg = resolve_config(a.common);
  std::vector<std::pair<std::string, std::string>> specs;
  if (!a.checkpoint.empty()) specs.emplace_back("full", a.checkpoint);
  for (const auto& v : a.variants) {
    const auto eq = v.find('=');
    if (eq == std::string::npos || eq == 0) throw afe::ConfigError("--variant expects label=checkpoint, got '" + v + "'");
    specs.emplace_back(v.substr(0, eq), v.substr(eq + 1));
  }
  if (specs.empty()) throw afe::ConfigError("eval needs --checkpoint or at least one --variant");

  std::vector<afe::VelocityModel> models;
  models.reserve(specs.size());
  for (const auto& [label, path] : specs) models.push_back(load_model(path, cfg));
  std::vector<afe::ExperimentVariant> variants;
  for (std::size_t i = 0; i < specs.size(); ++i) variants.push_back({specs[i].first, &models[i], {}});

  afe::ExperimentConfig ec;
  ec.n_edits = cfg.eval_edits;
  ec.seed = afe::derive_seed(cfg.seed, "evaluation");
  ec.sweep = cfg.eval_sweep;
  ec.fixed_levels = cfg.eval_fixed_levels;
  ec.v2a = cfg.eval_v2a;
  ec.settings.sampler = cfg.sampler;
  ec.settings.guidance = cfg.guidance;
  ec.settings.s_min = cfg.s_min;
  ec.settings.s_max = cfg.s_max;
  ec.jobs = cfg.effective_jobs();
  ec.config_fingerprint = cfg.fingerprint();

  const afe::MelCodec codec;
  const auto oracle = oracle_for(cfg);
  const auto report = afe::run_experiment(ec, variants, codec, *oracle);
  afe::save_report_json(a.out, report);
  if (!a.csv.empty()) afe::save_report_csv(a.csv, report);
  for (const auto& g : report.aggregates) {
    std::cout << g.variant << " " << g.row << ": level " << g.mean_level << ", alignment " << g.alignment
              << ", envelope_correlation " << g.envelope_correlation << ", lsd " << g.log_spectral_distance
              << " dB, fidelity " << g.prompt_fidelity << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"afe: acoustic-feature conditioned audio editing toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Render a synthetic corpus of scenes with control tracks");
  add_common(c_synth, synth.common);
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--n", synth.n, "Number of scenes (corpus.size)");

  FeaturesArgs feats;
  auto* c_feats = app.add_subcommand("features", "Extract hierarchical loudness features from a WAV file");
  add_common(c_feats, feats.common);
  c_feats->add_option("--in", feats.in, "Input WAV")->required();
  c_feats->add_option("--out", feats.out, "Output file")->required();
  c_feats->add_option("--level", feats.level, "Level of detail to keep (0..l_max)");
  c_feats->add_option("--format", feats.format, "bin or json")->check(CLI::IsMember({"bin", "json"}));

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train the velocity model on a corpus");
  add_common(c_train, tr.common);
  c_train->add_option("--corpus", tr.corpus, "Corpus directory or manifest.json")->required();
  c_train->add_option("--out", tr.out, "Checkpoint path")->required();
  c_train->add_option("--steps", tr.steps, "Training steps (model.total_steps)");

  EditArgs ed;
  auto* c_edit = app.add_subcommand("edit", "Edit a source clip toward a target control track and class");
  add_common(c_edit, ed.common);
  c_edit->add_option("--checkpoint", ed.checkpoint, "Model checkpoint")->required();
  c_edit->add_option("--source", ed.source, "Source WAV (first 8 s are used)")->required();
  c_edit->add_option("--control", ed.control, "Target control-track JSON")->required();
  c_edit->add_option("--class", ed.target_class, "Target class id (default: the control track's class)");
  c_edit->add_option("--out", ed.out, "Edited WAV; a .json sidecar is written next to it")->required();
  auto* lvl = c_edit->add_option("--level", ed.level, "Fixed level of detail (disables adaptive conditioning)");
  c_edit->add_flag("--full-mask", ed.full_mask, "Drop all acoustic features (video-to-audio mode)")->excludes(lvl);

  ScoreArgs sc;
  auto* c_score = app.add_subcommand("score", "Print the editability score and level for a source/target pair");
  add_common(c_score, sc.common);
  c_score->add_option("--source", sc.source, "Source WAV")->required();
  c_score->add_option("--control", sc.control, "Target control-track JSON")->required();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Run the level sweep and ablation rows and write a metric report");
  add_common(c_eval, ev.common);
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint evaluated under the label 'full'");
  c_eval->add_option("--variant", ev.variants, "Extra label=checkpoint pairs, e.g. tm_off=tm_off.ckpt");
  c_eval->add_option("--out", ev.out, "Report JSON")->required();
  c_eval->add_option("--csv", ev.csv, "Optional CSV tradeoff table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*c_synth) return cmd_synth(synth);
    if (*c_feats) return cmd_features(feats);
    if (*c_train) return cmd_train(tr);
    if (*c_edit) return cmd_edit(ed);
    if (*c_score) return cmd_score(sc);
    if (*c_eval) return cmd_eval(ev);
  } catch (const afe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const afe::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const afe::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const afe::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
