// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//
// Set AFE_ACCEPTANCE_CACHE to a directory to reuse trained checkpoints
// between runs and keep the metric report; by default both models are
// trained from scratch.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "afe/adaptive.hpp"
#include "afe/corpus.hpp"
#include "afe/experiment.hpp"
#include "afe/features.hpp"
#include "afe/flow.hpp"
#include "afe/metrics.hpp"
#include "afe/model.hpp"
#include "afe/parallel.hpp"
#include "afe/scene.hpp"
#include "afe/train.hpp"
#include "model_fixtures.hpp"

namespace fs = std::filesystem;
using namespace afe;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::vector<std::pair<int, bool>> g_results;

void report(int id, Verdict& v) {
  std::cout << "CRITERION " << id << ": " << (v.pass ? "PASS" : "FAIL") << " -" << v.detail.str() << std::endl;
  g_results.emplace_back(id, v.pass);
}

template <typename Fn>
void guarded(int id, Fn&& fn) {
  Verdict v;
  try {
    fn(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  report(id, v);
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << x;
  return s.str();
}

// ---------------------------------------------------------------- 1

void criterion_feature_partition(Verdict& v) {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(101, "partition"));
  const FeatureConfig fcfg;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int cls = rng.uniform_int(0, kNumClasses - 1);
    const Scene scene = synth_scene(random_scene_spec(cls, rng.next_u64()));
    const LoudnessHierarchy h = loudness_hierarchy(stft_magnitude(scene.audio, fcfg), 3, fcfg);
    for (int l = 0; l < 3; ++l) {
      const auto& coarse = h.linear[static_cast<std::size_t>(l)];
      const auto& fine = h.linear[static_cast<std::size_t>(l + 1)];
      for (Eigen::Index b = 0; b < coarse.rows(); ++b) {
        for (Eigen::Index t = 0; t < coarse.cols(); ++t) {
          const double whole = coarse(b, t);
          const double parts = fine(2 * b, t) + fine(2 * b + 1, t);
          const double rel = std::abs(whole - parts) / std::max(std::abs(whole), 1e-300);
          if (whole != parts) worst = std::max(worst, rel);
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  v.detail << " worst relative error " << fmt(worst) << ", " << fmt(elapsed, 3) << " s";
  v.require(worst < 1e-9, "nesting error >= 1e-9");
  v.require(elapsed < 30.0, "runtime >= 30 s");
}

// ---------------------------------------------------------------- 2

void criterion_a_weighting(Verdict& v) {
  const double g1k = a_weight_gain(1000.0);
  const double db100 = 20.0 * std::log10(a_weight_gain(100.0));
  v.detail << " gain(1000)=" << std::setprecision(17) << g1k << ", gain(100)=" << fmt(db100, 5) << " dB";
  v.require(g1k == 1.0, "gain(1000 Hz) != 1");
  v.require(std::abs(db100 - (-19.1)) <= 0.3, "gain(100 Hz) not within 0.3 dB of -19.1 dB");
}

// ---------------------------------------------------------------- 3

void criterion_quantizer(Verdict& v) {
  const std::vector<std::pair<double, int>> table = {{0.02, 0}, {0.17, 2}, {0.32, 3}, {-1.0, 0}, {1.0, 3}};
  for (const auto& [s, want] : table) {
    const int got = quantize_level(s, 0.02, 0.32, 3);
    v.detail << " " << s << "->" << got;
    v.require(got == want, "s=" + fmt(s) + " expected level " + std::to_string(want));
  }
}

// ---------------------------------------------------------------- 4

// Velocity depends on which of (C, a) are null, so every guidance term is distinct.
class StubField : public VelocityField {
public:
  LatentClip velocity(const LatentClip& x, double t, const ConditionBundle& c, const AcousticFeatures& a) const override {
    LatentClip out = x;
    const double cterm = c.is_null() ? 0.0 : 1.0 + c.prompt.class_id;
    const double aterm = a.is_null() ? 0.0 : a.channels.sum() / static_cast<double>(a.channels.size());
    out.values = (0.3 * x.values).array().sin().matrix();
    out.values.array() += t + 2.0 * cterm + 5.0 * aterm;
    return out;
  }
  Eigen::Index latent_channels() const override { return 3; }
  Eigen::Index latent_frames() const override { return 7; }
  int feature_max_level() const override { return 1; }
  Eigen::Index feature_frames() const override { return 6; }
};

void criterion_guidance(Verdict& v) {
  const StubField f;
  Rng rng(derive_seed(404, "guidance"));
  ControlTrack track = ControlTrack::zeros(8);
  for (Eigen::Index j = 0; j < 8; ++j) track.frames(2, j) = rng.uniform();
  const ConditionBundle c = ConditionBundle::make(PromptLabel{2}, track, f.latent_frames());
  const ConditionBundle c0 = ConditionBundle::null(track.n_frames(), f.latent_frames());
  AcousticFeatures a = AcousticFeatures::null(1, 6);
  for (Eigen::Index i = 0; i < a.channels.size(); ++i) a.channels(i) = rng.normal();
  const AcousticFeatures a0 = AcousticFeatures::null(1, 6);

  double worst = 0.0;
  auto diff = [&](const LatentClip& p, const LatentClip& q) {
    worst = std::max(worst, (p.values - q.values).cwiseAbs().maxCoeff());
  };
  for (int trial = 0; trial < 100; ++trial) {
    const GuidanceWeights g = trial == 0 ? GuidanceWeights{7.5, 3.75}
                                         : GuidanceWeights{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
    const LatentClip x = standard_normal_latent(3, 7, rng);
    const double t = rng.uniform();
    const auto u00 = f.velocity(x, t, c0, a0);
    const auto uc0 = f.velocity(x, t, c, a0);
    const auto uca = f.velocity(x, t, c, a);
    // (w1, w2) = (0, 0), (1, 0), (1, 1) recover the three individual terms.
    diff(guided_velocity(f, x, t, c, a, {0.0, 0.0}), u00);
    diff(guided_velocity(f, x, t, c, a, {1.0, 0.0}), uc0);
    diff(guided_velocity(f, x, t, c, a, {1.0, 1.0}), uca);
    LatentClip expect = x;
    expect.values = u00.values + g.w1 * (uc0.values - u00.values) + g.w2 * (uca.values - uc0.values);
    const auto got = guided_velocity(f, x, t, c, a, g);
    worst = std::max(worst, (got.values - expect.values).cwiseAbs().maxCoeff() / (1.0 + expect.values.cwiseAbs().maxCoeff()));
    // Under null features the stacked form collapses to single-term guidance.
    diff(guided_velocity(f, x, t, c, a0, g), guided_velocity_single(f, x, t, c, g.w1));
  }
  v.detail << " 100 weight settings incl. (7.5, 3.75), worst deviation " << fmt(worst);
  v.require(worst <= 1e-12, "identity deviation > 1e-12");
}

// ---------------------------------------------------------------- 5

void criterion_gradient(Verdict& v) {
  const auto t0 = Clock::now();
  const VelocityNet<double> probe(afe_test::tiny_config(), 0);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) worst = std::max(worst, afe_test::gradient_check_error(seed));
  const double elapsed = seconds_since(t0);
  v.detail << " " << probe.trainable_count() << " trainable params, 20 seeds, worst relative error " << fmt(worst)
           << ", " << fmt(elapsed, 3) << " s";
  v.require(probe.param_count() <= 5000, "model larger than 5k parameters");
  v.require(worst < 1e-4, "relative error >= 1e-4");
  v.require(elapsed < 120.0, "runtime >= 2 min");
}

// ---------------------------------------------------------------- 6

void criterion_identity_and_freeze(Verdict& v) {
  const ModelConfig mc;
  const VelocityModel model(mc, derive_seed(606, "model"));
  Rng rng(derive_seed(606, "inputs"));
  bool invariant = true;
  for (int trial = 0; trial < 5; ++trial) {
    const Scene s = synth_scene(random_scene_spec(trial % kNumClasses, rng.next_u64()));
    const ConditionBundle c = ConditionBundle::make(PromptLabel{trial % kNumClasses}, s.control, mc.latent_frames);
    const LatentClip x = standard_normal_latent(mc.latent_channels, mc.latent_frames, rng);
    const double t = rng.uniform();
    const auto base = model.velocity(x, t, c, AcousticFeatures::null(mc.feature_max_level, mc.feature_frames));
    const auto with = model.velocity(x, t, c, extract(s.audio, trial % 4, mc.feature_max_level));
    invariant = invariant && base.values == with.values;
  }
  v.detail << " init invariance " << (invariant ? "exact" : "broken");
  v.require(invariant, "output changes with acoustic features at init");

  const TrainingSet set = afe_test::scene_training_set(4, 66);
  for (int total : {10, 7}) {
    VelocityModel m(mc, derive_seed(606, "model"));
    TrainSchedule s;
    s.total_steps = total;
    s.batch_size = 2;
    s.freeze_fraction = 0.5;
    s.checkpoint_every = 1;
    std::vector<float> prev = m.group_values(ParamGroup::Modulation);
    int first_change = -1;
    auto hook = [&](int after, const VelocityModel& cur) {
      auto now = cur.group_values(ParamGroup::Modulation);
      if (first_change < 0 && now != prev) first_change = after - 1;
      prev = std::move(now);
    };
    const TrainResult r = train(m, set, s, AugmentPolicy{}, 1, hook);
    const int expect = static_cast<int>(std::ceil(0.5 * total));
    v.detail << ", total " << total << ": first change at step " << first_change << " (expected " << expect << ")";
    v.require(first_change == expect && r.first_modulation_update == expect, "wrong unfreeze step");
  }
}

// ---------------------------------------------------------------- 7, 8

struct ModelRun {
  VelocityModel model;
  double train_seconds = 0.0;
  double final_loss = 0.0;
};

constexpr int kTrainSteps = 6000;
constexpr int kCorpusSize = 200;
constexpr std::uint64_t kSeed = 20241;

ModelRun train_variant(const TrainingSet& set, double temporal_mask_rate, const std::string& tag) {
  ModelConfig mc;
  ModelRun run{VelocityModel(mc, derive_seed(kSeed, "model"))};
  fs::path cached;
  if (const char* dir = std::getenv("AFE_ACCEPTANCE_CACHE")) {
    fs::create_directories(dir);
    cached = fs::path(dir) / ("acceptance_" + tag + "_" + std::to_string(kTrainSteps) + ".ckpt");
    if (fs::exists(cached)) {
      run.model = load_checkpoint(cached, mc);
      std::cerr << "[acceptance] loaded cached " << tag << " model from " << cached << "\n";
      return run;
    }
  }
  TrainSchedule s;
  s.total_steps = kTrainSteps;
  s.seed = derive_seed(kSeed, "training");
  AugmentPolicy policy;
  policy.temporal_mask_rate = temporal_mask_rate;
  policy.seed = derive_seed(kSeed, "augment");
  const auto t0 = Clock::now();
  const TrainResult r = train(run.model, set, s, policy, default_jobs());
  run.train_seconds = seconds_since(t0);
  double tail = 0.0;
  const std::size_t n = std::min<std::size_t>(100, r.loss_trace.size());
  for (std::size_t i = r.loss_trace.size() - n; i < r.loss_trace.size(); ++i) tail += r.loss_trace[i] / n;
  run.final_loss = tail;
  std::cerr << "[acceptance] trained " << tag << " model: " << kTrainSteps << " steps, " << fmt(run.train_seconds, 4)
            << " s, final loss " << fmt(tail) << "\n";
  if (!cached.empty()) save_checkpoint(run.model, cached);
  return run;
}

std::vector<double> pooled(const MetricReport& rep, const std::string& variant, const std::vector<std::string>& rows,
                           double MetricRow::*field) {
  std::vector<double> out;
  for (const auto& row : rows) {
    const auto v = rep.values(variant, row, field);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void behavioral_criteria() {
  const auto t0 = Clock::now();
  const fs::path work = fs::temp_directory_path() / ("afe_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(work);

  ModelRun tm_on{VelocityModel(ModelConfig{})}, tm_off{VelocityModel(ModelConfig{})};
  MetricReport rep;
  ExperimentConfig cfg;
  std::string setup_error;
  try {
    const auto manifest = make_corpus(kCorpusSize, derive_seed(kSeed, "corpus"), work / "corpus");
    const MelCodec codec;
    const TrainingSet set = build_training_set(load_corpus(manifest, "train"), codec, kDefaultMaxLevel);
    std::cerr << "[acceptance] corpus of " << kCorpusSize << " clips, " << set.latents.size()
              << " training clips\n";
    tm_on = train_variant(set, AugmentPolicy{}.temporal_mask_rate, "tm_on");
    tm_off = train_variant(set, 0.0, "tm_off");

    cfg.n_edits = 64;
    cfg.seed = derive_seed(kSeed, "eval");
    cfg.jobs = default_jobs();
    cfg.settings.sampler.n_steps = 25;
    const std::vector<RowSpec> sweep = {{LevelMode::Adaptive, 0}, {LevelMode::Adaptive, 1},
                                        {LevelMode::Adaptive, 2}, {LevelMode::Adaptive, 3}};
    std::vector<RowSpec> on_rows = sweep;
    on_rows.push_back({LevelMode::FullMask, 0});
    for (int l = 1; l <= 3; ++l) on_rows.push_back({LevelMode::Fixed, l});
    const auto t_eval = Clock::now();
    rep = run_experiment(cfg, {{"tm_on", &tm_on.model, on_rows}, {"tm_off", &tm_off.model, sweep}}, codec,
                         default_oracle());
    std::cerr << "[acceptance] evaluated " << rep.rows.size() << " edits in " << fmt(seconds_since(t_eval), 4)
              << " s\n";
    save_report_json(work / "report.json", rep);
    if (const char* dir = std::getenv("AFE_ACCEPTANCE_CACHE")) save_report_json(fs::path(dir) / "acceptance_report.json", rep);
    for (const auto& a : rep.aggregates) {
      std::cerr << "[acceptance]   " << std::left << std::setw(7) << a.variant << std::setw(9) << a.row
                << " level " << fmt(a.mean_level, 3) << "  align " << fmt(a.alignment) << "  env "
                << fmt(a.envelope_correlation) << "  lsd " << fmt(a.log_spectral_distance) << "  fidelity "
                << fmt(a.prompt_fidelity) << "\n";
    }
  } catch (const std::exception& e) {
    setup_error = e.what();
  }

  guarded(7, [&](Verdict& v) {
    if (!setup_error.empty()) throw std::runtime_error(setup_error);
    const auto e3 = rep.values("tm_on", "ac_lmax3", &MetricRow::envelope_correlation);
    const auto e0 = rep.values("tm_on", "ac_lmax0", &MetricRow::envelope_correlation);
    const auto ev = rep.values("tm_on", "v2a", &MetricRow::envelope_correlation);
    const PairedTest hi = paired_t_test(e3, e0);
    const PairedTest lo = paired_t_test(e0, ev);
    v.detail << " n=" << e3.size() << ", " << tm_on.model.param_count() << " params, train "
             << fmt(tm_on.train_seconds, 4) << " s; env_corr l_max=3 " << fmt(mean(e3)) << " > l_max=0 "
             << fmt(mean(e0)) << " (p=" << fmt(hi.p_value, 3) << ") > v2a " << fmt(mean(ev)) << " (p="
             << fmt(lo.p_value, 3) << ")";
    v.require(e3.size() >= 50, "fewer than 50 edits");
    v.require(tm_on.model.param_count() <= 2'000'000, "model exceeds 2M parameters");
    v.require(tm_on.train_seconds <= 1800.0, "training exceeded 30 min");
    v.require(hi.mean_difference > 0.0 && hi.p_value < 0.05, "l_max=3 not significantly above l_max=0");
    v.require(lo.mean_difference > 0.0 && lo.p_value < 0.05, "l_max=0 not significantly above v2a");
  });

  guarded(8, [&](Verdict& v) {
    if (!setup_error.empty()) throw std::runtime_error(setup_error);
    // (a) temporal masking ablation over the adaptive level sweep.
    const std::vector<std::string> sweep_rows = {"ac_lmax0", "ac_lmax1", "ac_lmax2", "ac_lmax3"};
    const auto on = pooled(rep, "tm_on", sweep_rows, &MetricRow::alignment);
    const auto off = pooled(rep, "tm_off", sweep_rows, &MetricRow::alignment);
    const PairedTest tm = paired_t_test(on, off);
    v.detail << " (a) alignment TM-on " << fmt(mean(on)) << " vs TM-off " << fmt(mean(off)) << " (n=" << on.size()
             << ", p=" << fmt(tm.p_value, 3) << ")";
    v.require(tm.mean_difference > 0.0 && tm.p_value < 0.05, "TM-off not significantly below TM-on");

    // (b) adaptive conditioning vs fixed levels blended to the same mean level.
    const auto ac = rep.values("tm_on", "ac_lmax3", &MetricRow::envelope_correlation);
    const double level = mean(rep.levels("tm_on", "ac_lmax3"));
    const int lo = std::clamp(static_cast<int>(std::floor(level)), 0, 2);
    const double frac = level - lo;
    auto fixed_row = [](int l) { return l == 0 ? std::string("ac_lmax0") : "fixed" + std::to_string(l); };
    const auto f_lo = rep.values("tm_on", fixed_row(lo), &MetricRow::envelope_correlation);
    const auto f_hi = rep.values("tm_on", fixed_row(lo + 1), &MetricRow::envelope_correlation);
    std::vector<double> matched(ac.size());
    for (std::size_t i = 0; i < ac.size(); ++i) matched[i] = (1.0 - frac) * f_lo[i] + frac * f_hi[i];
    const PairedTest acp = paired_t_test(ac, matched);
    v.detail << "; (b) env_corr AC-on " << fmt(mean(ac)) << " vs AC-off " << fmt(mean(matched))
             << " at matched mean level " << fmt(level, 3) << " (p=" << fmt(acp.p_value, 3) << ")";
    v.require(acp.mean_difference > 0.0 && acp.p_value < 0.05, "AC-off not significantly below AC-on");
  });

  std::cerr << "[acceptance] behavioral criteria took " << fmt(seconds_since(t0), 4) << " s\n";
  std::error_code ec;
  fs::remove_all(work, ec);
}

// ---------------------------------------------------------------- 9

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(AFE_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> bytes for every regular file below dir.
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() != ".log") {
      out.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void criterion_determinism(Verdict& v) {
  const fs::path root = fs::temp_directory_path() / ("afe_determinism_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string small = " --seed 9 --set model.batch_size=2 --set sampler.n_steps=4 --set eval.edits=2"
                            " --set eval.sweep=0,3 --set eval.fixed_levels=1";
  // Second run uses a different worker count; results must not depend on it.
  const std::vector<std::string> jobs = {" --jobs 1", " --jobs 2"};
  for (int r = 0; r < 2; ++r) {
    const fs::path d = root / ("run" + std::to_string(r));
    fs::create_directories(d);
    const std::string base = small + jobs[static_cast<std::size_t>(r)];
    const std::string corpus = (d / "corpus").string();
    const std::string ckpt = (d / "model.ckpt").string();
    const std::string src = (d / "corpus" / "scene_00000.wav").string();
    const std::string ctl = (d / "corpus" / "scene_00001.control.json").string();
    const std::vector<std::pair<std::string, std::string>> steps = {
        {"synth", "synth --out " + corpus + " --n 8" + base},
        {"train", "train --corpus " + corpus + " --out " + ckpt + " --steps 3" + base},
        {"edit", "edit --checkpoint " + ckpt + " --source " + src + " --control " + ctl + " --out " +
                     (d / "edit.wav").string() + base},
        {"edit_fixed", "edit --checkpoint " + ckpt + " --source " + src + " --control " + ctl + " --level 2 --out " +
                           (d / "edit_fixed.wav").string() + base},
        {"eval", "eval --checkpoint " + ckpt + " --out " + (d / "report.json").string() + " --csv " +
                     (d / "report.csv").string() + base},
    };
    for (const auto& [name, args] : steps) {
      const int code = run_cli(args, d / (name + ".log"));
      if (code != 0) {
        v.require(false, "afe " + name + " exited with " + std::to_string(code) + ": " + slurp(d / (name + ".log")));
        return;
      }
    }
  }
  const auto a = snapshot(root / "run0");
  const auto b = snapshot(root / "run1");
  std::size_t bytes = 0;
  for (const auto& f : a) bytes += f.second.size();
  v.detail << " synth/train/edit/eval run twice (--jobs 1 vs 2): " << a.size() << " files, " << bytes << " bytes";
  v.require(a.size() == b.size(), "different file sets");
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    v.require(a[i] == b[i], "file differs: " + a[i].first);
  }
  fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
  bool fast = false;
  for (int i = 1; i < argc; ++i) fast = fast || std::string(argv[i]) == "--fast";
  std::cout << std::unitbuf;
  guarded(1, criterion_feature_partition);
  guarded(2, criterion_a_weighting);
  guarded(3, criterion_quantizer);
  guarded(4, criterion_guidance);
  guarded(5, criterion_gradient);
  guarded(6, criterion_identity_and_freeze);
  if (fast) {
    std::cout << "CRITERION 7: SKIPPED (--fast)\nCRITERION 8: SKIPPED (--fast)\n";
  } else {
    behavioral_criteria();
  }
  guarded(9, criterion_determinism);

  int failed = 0;
  for (const auto& [id, ok] : g_results) failed += ok ? 0 : 1;
  std::cout << (failed == 0 ? "ALL CRITERIA PASSED" : std::to_string(failed) + " CRITERIA FAILED") << std::endl;
  return failed == 0 ? 0 : 1;
}
