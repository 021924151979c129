#include "afe/experiment.hpp"

#include <fstream>
#include <iomanip>
#include <map>

#include <json.hpp>

#include "afe/errors.hpp"
#include "afe/parallel.hpp"

namespace afe {

EditOutcome edit_audio(const VelocityModel& model, const MelCodec& codec, const EmbeddingOracle& oracle,
                       const AudioClip& source, const ControlTrack& target_control, int target_class,
                       const LevelChoice& choice, const EditSettings& settings) {
  const ModelConfig& mc = model.config();
  const int L = mc.feature_max_level;
  const auto expected_samples = static_cast<std::size_t>(mc.latent_frames) * codec.config().hop;
  if (source.sample_rate != kSampleRate || source.samples.size() != expected_samples) {
    throw InvalidInput("source audio must be " + std::to_string(expected_samples) + " samples at 16 kHz");
  }
  if (target_class < 0 || target_class >= mc.num_classes) throw InvalidInput("target class out of range");

  EditOutcome out;
  out.plan.guidance = settings.guidance;
  out.plan.s_min = settings.s_min;
  out.plan.s_max = settings.s_max;
  switch (choice.mode) {
    case LevelMode::Adaptive:
      if (choice.value < 0 || choice.value > L) throw InvalidInput("l_max out of range for this model");
      out.plan = plan_edit(oracle, source, target_control, choice.value, settings.guidance, settings.s_min,
                           settings.s_max);
      out.level = out.plan.level;
      out.adaptive = true;
      break;
    case LevelMode::Fixed:
      if (choice.value < 0 || choice.value > L) throw InvalidInput("level out of range for this model");
      out.plan.score = editability_score(oracle, source, target_control);
      out.plan.l_max = L;
      out.plan.level = choice.value;
      out.level = choice.value;
      out.adaptive = false;
      break;
    case LevelMode::FullMask:
      out.plan.score = editability_score(oracle, source, target_control);
      out.plan.l_max = L;
      out.plan.level = -1;
      out.level = -1;
      out.adaptive = false;
      break;
  }

  const auto h = loudness_hierarchy(stft_magnitude(source), L);
  const AcousticFeatures feats = assemble_features(h, DetailMask::pure(out.level, L, h.frames()));
  const ConditionBundle cond = ConditionBundle::make(PromptLabel{target_class}, target_control, mc.latent_frames);
  out.latent = sample(model, settings.sampler, cond, feats, settings.guidance);
  out.audio = codec.decode(out.latent, model.latent_stats(), source.samples.size(),
                           derive_seed(settings.sampler.seed, "phase"));
  return out;
}

std::vector<EditInstance> make_edit_set(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("edit set size must be positive");
  const std::uint64_t root = derive_seed(seed, "eval");
  std::vector<EditInstance> set;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t s = derive_seed(root, static_cast<std::uint64_t>(i));
    Rng rng(s);
    EditInstance e;
    e.id = "edit" + std::to_string(i);
    e.easy = i % 2 == 0;
    const int a = i % kNumClasses;
    const int b = (a + rng.uniform_int(1, kNumClasses - 1)) % kNumClasses;
    e.source = random_scene_spec(a, derive_seed(s, "source"));
    e.target = random_scene_spec(b, derive_seed(s, "target"));
    if (e.easy) e.target.envelope = e.source.envelope;
    e.noise_seed = derive_seed(s, "noise");
    set.push_back(std::move(e));
  }
  return set;
}

std::string RowSpec::label() const {
  switch (mode) {
    case LevelMode::Adaptive:
      return "ac_lmax" + std::to_string(value);
    case LevelMode::Fixed:
      return "fixed" + std::to_string(value);
    case LevelMode::FullMask:
      return "v2a";
  }
  return {};
}

std::vector<RowSpec> ExperimentConfig::default_rows() const {
  std::vector<RowSpec> rows;
  for (int l : sweep) rows.push_back({LevelMode::Adaptive, l});
  for (int l : fixed_levels) rows.push_back({LevelMode::Fixed, l});
  if (v2a) rows.push_back({LevelMode::FullMask, 0});
  return rows;
}

std::vector<double> MetricReport::values(const std::string& variant, const std::string& row,
                                         double MetricRow::*field) const {
  std::vector<std::pair<std::size_t, double>> picked;
  for (const auto& r : rows) {
    if (r.variant == variant && r.row == row) picked.emplace_back(r.index, r.*field);
  }
  std::sort(picked.begin(), picked.end());
  std::vector<double> out;
  for (const auto& [i, v] : picked) out.push_back(v);
  return out;
}

std::vector<double> MetricReport::levels(const std::string& variant, const std::string& row) const {
  std::vector<std::pair<std::size_t, double>> picked;
  for (const auto& r : rows) {
    if (r.variant == variant && r.row == row) picked.emplace_back(r.index, r.level);
  }
  std::sort(picked.begin(), picked.end());
  std::vector<double> out;
  for (const auto& [i, v] : picked) out.push_back(v);
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricRow>& rows) {
  std::vector<AggregateRow> out;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.variant, r.row);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.size()).first;
      AggregateRow a;
      a.variant = r.variant;
      a.row = r.row;
      out.push_back(a);
    }
    AggregateRow& a = out[it->second];
    ++a.n;
    a.mean_level += r.level;
    a.alignment += r.alignment;
    a.envelope_correlation += r.envelope_correlation;
    a.log_spectral_distance += r.log_spectral_distance;
    a.prompt_fidelity += r.prompt_fidelity;
  }
  for (auto& a : out) {
    const double n = static_cast<double>(a.n);
    a.mean_level /= n;
    a.alignment /= n;
    a.envelope_correlation /= n;
    a.log_spectral_distance /= n;
    a.prompt_fidelity /= n;
  }
  return out;
}

MetricReport run_experiment(const ExperimentConfig& cfg, const std::vector<ExperimentVariant>& variants,
                            const MelCodec& codec, const EmbeddingOracle& oracle) {
  if (variants.empty()) throw ConfigError("experiment has no model variants");
  for (const auto& v : variants) {
    if (!v.model) throw ConfigError("variant '" + v.label + "' has no model");
  }
  const auto instances = make_edit_set(cfg.n_edits, cfg.seed);

  struct Job {
    std::size_t variant;
    RowSpec row;
    std::size_t instance;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const auto rows = variants[v].rows.empty() ? cfg.default_rows() : variants[v].rows;
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < instances.size(); ++i) jobs.push_back({v, row, i});
    }
  }

  std::vector<Scene> sources(instances.size()), targets(instances.size());
  parallel_for(instances.size(), cfg.jobs, [&](std::size_t i) {
    sources[i] = synth_scene(instances[i].source);
    targets[i] = synth_scene(instances[i].target);
  });

  MetricReport report;
  report.config_fingerprint = cfg.config_fingerprint;
  report.rows.resize(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t j) {
    const Job& job = jobs[j];
    const EditInstance& inst = instances[job.instance];
    EditSettings settings = cfg.settings;
    settings.sampler.seed = inst.noise_seed;
    const EditOutcome res = edit_audio(*variants[job.variant].model, codec, oracle, sources[job.instance].audio,
                                       targets[job.instance].control, inst.target.class_id,
                                       {job.row.mode, job.row.value}, settings);
    MetricRow& r = report.rows[j];
    r.variant = variants[job.variant].label;
    r.row = job.row.label();
    r.instance = inst.id;
    r.index = job.instance;
    r.easy = inst.easy;
    r.source_class = inst.source.class_id;
    r.target_class = inst.target.class_id;
    r.level = res.level;
    r.score = res.plan.score;
    r.alignment = alignment_score(oracle, res.audio, targets[job.instance].control);
    const StructureDistance sd = structure_distance(sources[job.instance].audio, res.audio);
    r.envelope_correlation = sd.envelope_correlation;
    r.log_spectral_distance = sd.log_spectral_distance;
    r.degenerate = sd.degenerate;
    r.prompt_fidelity = prompt_fidelity(oracle, res.audio, PromptLabel{inst.target.class_id});
  });
  report.aggregates = aggregate(report.rows);
  return report;
}

void save_report_json(const std::filesystem::path& path, const MetricReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = report.schema_version;
  j["config_fingerprint"] = report.config_fingerprint;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"variant", r.variant},
                         {"row", r.row},
                         {"instance", r.instance},
                         {"easy", r.easy},
                         {"source_class", r.source_class},
                         {"target_class", r.target_class},
                         {"level", r.level},
                         {"score", r.score},
                         {"alignment", r.alignment},
                         {"envelope_correlation", r.envelope_correlation},
                         {"log_spectral_distance", r.log_spectral_distance},
                         {"degenerate", r.degenerate},
                         {"prompt_fidelity", r.prompt_fidelity}});
  }
  j["aggregates"] = nlohmann::ordered_json::array();
  for (const auto& a : report.aggregates) {
    j["aggregates"].push_back({{"variant", a.variant},
                               {"row", a.row},
                               {"n", a.n},
                               {"mean_level", a.mean_level},
                               {"alignment", a.alignment},
                               {"envelope_correlation", a.envelope_correlation},
                               {"log_spectral_distance", a.log_spectral_distance},
                               {"prompt_fidelity", a.prompt_fidelity}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

void save_report_csv(const std::filesystem::path& path, const MetricReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "variant,row,n,mean_level,alignment,envelope_correlation,log_spectral_distance,prompt_fidelity\n";
  out << std::setprecision(10);
  for (const auto& a : report.aggregates) {
    out << a.variant << ',' << a.row << ',' << a.n << ',' << a.mean_level << ',' << a.alignment << ','
        << a.envelope_correlation << ',' << a.log_spectral_distance << ',' << a.prompt_fidelity << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace afe
