#include "afe/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "afe/errors.hpp"
#include "afe/spectral.hpp"

namespace afe {

namespace {

constexpr int kBandFft = 1024;
constexpr int kBandHop = 256;
constexpr double kEnergyEps = 1e-12;

Eigen::VectorXd uniform_unit(int dim) { return Eigen::VectorXd::Constant(dim, 1.0 / std::sqrt(double(dim))); }

Eigen::VectorXd normalized_or_uniform(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) return uniform_unit(static_cast<int>(v.size()));
  return v / n;
}

}  // namespace

const std::array<double, kEmbeddingDim + 1>& FingerprintOracle::band_edges() {
  static const std::array<double, kEmbeddingDim + 1> edges = [] {
    std::array<double, kEmbeddingDim + 1> e{};
    e[0] = 0.0;
    for (int k = 1; k <= kEmbeddingDim; ++k) {
      e[static_cast<std::size_t>(k)] = 250.0 * std::pow(8000.0 / 250.0, (k - 1) / double(kEmbeddingDim - 1));
    }
    e[kEmbeddingDim] = 8000.0;
    return e;
  }();
  return edges;
}

FingerprintOracle::FingerprintOracle() {
  for (int k = 0; k < kNumClasses; ++k) {
    SceneSpec spec;
    spec.class_id = k;
    spec.carrier = nominal_carrier(k);
    spec.duration = kScoreWindowSeconds;
    spec.envelope = Envelope::constant(1.0, spec.duration);
    spec.seed = 0;
    templates_.push_back(band_energy(synth_scene(spec).audio));
  }
}

Eigen::VectorXd FingerprintOracle::band_energy(const AudioClip& window) const {
  if (window.sample_rate != kSampleRate) throw InvalidInput("oracle expects 16 kHz audio");
  Eigen::VectorXd energy = Eigen::VectorXd::Zero(kEmbeddingDim);
  if (window.samples.empty()) return uniform_unit(kEmbeddingDim);
  const Eigen::MatrixXcd spec = stft(window.samples, kBandFft, kBandHop);
  const auto& edges = band_edges();
  const double bin_hz = static_cast<double>(window.sample_rate) / kBandFft;
  int band = 0;
  for (Eigen::Index b = 0; b < spec.rows(); ++b) {
    const double f = static_cast<double>(b) * bin_hz;
    while (band < kEmbeddingDim - 1 && f >= edges[static_cast<std::size_t>(band + 1)]) ++band;
    energy(band) += spec.row(b).cwiseAbs2().sum();
  }
  energy.array() += kEnergyEps;
  return energy / energy.norm();
}

Eigen::VectorXd FingerprintOracle::embed_audio(const AudioClip& window, std::size_t) const {
  return band_energy(window);
}

Eigen::VectorXd FingerprintOracle::embed_visual(const ControlTrack& segment, std::size_t) const {
  if (segment.frames.rows() != kNumClasses) throw InvalidInput("control track must have one channel per class");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kEmbeddingDim);
  if (segment.n_frames() == 0) return uniform_unit(kEmbeddingDim);
  for (int k = 0; k < kNumClasses; ++k) v += templates_[static_cast<std::size_t>(k)] * segment.frames.row(k).mean();
  return normalized_or_uniform(v);
}

Eigen::VectorXd FingerprintOracle::embed_prompt(const PromptLabel& prompt) const {
  if (prompt.is_null()) return uniform_unit(kEmbeddingDim);
  if (prompt.class_id < 0 || prompt.class_id >= kNumClasses) throw InvalidInput("prompt class out of range");
  return templates_[static_cast<std::size_t>(prompt.class_id)];
}

namespace {

Eigen::VectorXd parse_unit_vector(const nlohmann::json& j, int& dim) {
  if (!j.is_array() || j.empty()) throw FormatError("embedding must be a non-empty array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  if (dim == 0) dim = static_cast<int>(v.size());
  if (v.size() != dim) throw FormatError("embeddings differ in dimension");
  const double n = v.norm();
  if (!(n > 0.0)) throw FormatError("embedding has zero norm");
  return v / n;
}

}  // namespace

ExternalOracle::ExternalOracle(const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw IoError("cannot open embedding sidecar " + sidecar.string());
  nlohmann::json j;
  try {
    in >> j;
    for (const auto& v : j.at("audio")) audio_.push_back(parse_unit_vector(v, dim_));
    for (const auto& v : j.at("visual")) visual_.push_back(parse_unit_vector(v, dim_));
    if (j.contains("prompts")) {
      for (const auto& [key, v] : j["prompts"].items()) prompts_.emplace_back(std::stoi(key), parse_unit_vector(v, dim_));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed embedding sidecar: ") + e.what());
  }
}

Eigen::VectorXd ExternalOracle::embed_audio(const AudioClip&, std::size_t index) const {
  if (index >= audio_.size()) throw InvalidInput("sidecar has no audio embedding for window " + std::to_string(index));
  return audio_[index];
}

Eigen::VectorXd ExternalOracle::embed_visual(const ControlTrack&, std::size_t index) const {
  if (index >= visual_.size()) throw InvalidInput("sidecar has no visual embedding for window " + std::to_string(index));
  return visual_[index];
}

Eigen::VectorXd ExternalOracle::embed_prompt(const PromptLabel& prompt) const {
  for (const auto& [k, v] : prompts_) {
    if (k == prompt.class_id) return v;
  }
  throw UnsupportedError("sidecar has no prompt embedding for class " + std::to_string(prompt.class_id));
}

const FingerprintOracle& default_oracle() {
  static const FingerprintOracle oracle;
  return oracle;
}

std::unique_ptr<EmbeddingOracle> make_oracle(const std::string& kind, const std::filesystem::path& sidecar) {
  if (kind == "fingerprint") return std::make_unique<FingerprintOracle>(default_oracle());
  if (kind == "external") {
    if (sidecar.empty()) throw ConfigError("the external oracle needs an embedding sidecar path");
    return std::make_unique<ExternalOracle>(sidecar);
  }
  throw ConfigError("unknown oracle '" + kind + "' (expected fingerprint or external)");
}

WindowScore windowed_similarity(const EmbeddingOracle& oracle, const AudioClip& audio, const ControlTrack& visual) {
  const double window = oracle.window_s();
  const double dur_a = audio.duration();
  const double dur_v = visual.duration();
  if (std::abs(dur_a - dur_v) > 1.0 / visual.frame_rate + 1e-9) {
    throw InvalidInput("audio and control track durations differ");
  }
  const double duration = std::min(dur_a, dur_v);
  const auto n_windows = static_cast<std::size_t>(std::floor(duration / window + 1e-9));
  if (n_windows == 0) throw InvalidInput("input is shorter than one scoring window");

  WindowScore out;
  const auto win_samples = static_cast<std::size_t>(std::llround(window * audio.sample_rate));
  for (std::size_t w = 0; w < n_windows; ++w) {
    const AudioClip a = audio.slice(w * win_samples, win_samples);
    const auto f0 = static_cast<Eigen::Index>(std::llround(static_cast<double>(w) * window * visual.frame_rate));
    const auto f1 = static_cast<Eigen::Index>(std::llround(static_cast<double>(w + 1) * window * visual.frame_rate));
    ControlTrack seg = visual;
    seg.frames = visual.frames.middleCols(f0, std::min(f1, visual.n_frames()) - f0);
    const double sim = oracle.embed_audio(a, w).dot(oracle.embed_visual(seg, w));
    out.similarities.push_back(std::clamp(sim, -1.0, 1.0));
  }
  double sum = 0.0;
  for (double s : out.similarities) sum += s;
  out.score = sum / static_cast<double>(n_windows);
  return out;
}

double editability_score(const EmbeddingOracle& oracle, const AudioClip& source, const ControlTrack& target) {
  return windowed_similarity(oracle, source, target).score;
}

int quantize_level(double s, double s_min, double s_max, int l_max) {
  if (!(s_min < s_max)) throw InvalidInput("quantize_level requires s_min < s_max");
  if (l_max < 0) throw InvalidInput("quantize_level requires l_max >= 0");
  const double norm = std::clamp((s - s_min) / (s_max - s_min), 0.0, 1.0);
  // std::round rounds halfway cases away from zero.
  return static_cast<int>(std::round(static_cast<double>(l_max) * norm));
}

EditPlan plan_edit(const EmbeddingOracle& oracle, const AudioClip& source, const ControlTrack& target, int l_max,
                   const GuidanceWeights& guidance, double s_min, double s_max) {
  guidance.validate();
  const WindowScore ws = windowed_similarity(oracle, source, target);
  EditPlan plan;
  plan.score = ws.score;
  plan.windows = ws.windows();
  plan.l_max = l_max;
  plan.s_min = s_min;
  plan.s_max = s_max;
  plan.level = quantize_level(ws.score, s_min, s_max, l_max);
  plan.guidance = guidance;
  return plan;
}

}  // namespace afe
