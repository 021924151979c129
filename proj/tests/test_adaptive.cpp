#include <doctest.h>

#include <fstream>

#include "afe/adaptive.hpp"
#include "afe/errors.hpp"
#include "test_util.hpp"

using namespace afe;
using afe_test::TempDir;

namespace {

// Oracle returning fixed vectors regardless of content.
class FixedOracle : public EmbeddingOracle {
public:
  FixedOracle(Eigen::VectorXd a, Eigen::VectorXd v) : a_(std::move(a)), v_(std::move(v)) {}
  Eigen::VectorXd embed_audio(const AudioClip&, std::size_t) const override { return a_; }
  Eigen::VectorXd embed_visual(const ControlTrack&, std::size_t) const override { return v_; }
  Eigen::VectorXd embed_prompt(const PromptLabel&) const override { return v_; }

private:
  Eigen::VectorXd a_, v_;
};

Eigen::VectorXd unit(int i) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kEmbeddingDim);
  v(i) = 1.0;
  return v;
}

// Counts the windows it is asked about.
class CountingOracle : public FixedOracle {
public:
  CountingOracle() : FixedOracle(unit(0), unit(0)) {}
  Eigen::VectorXd embed_audio(const AudioClip& w, std::size_t i) const override {
    ++calls;
    CHECK(w.samples.size() == 32000);
    last_index = i;
    return FixedOracle::embed_audio(w, i);
  }
  mutable int calls = 0;
  mutable std::size_t last_index = 0;
};

}  // namespace

TEST_CASE("quantizer table") {
  CHECK(quantize_level(0.02, 0.02, 0.32, 3) == 0);
  CHECK(quantize_level(0.17, 0.02, 0.32, 3) == 2);
  CHECK(quantize_level(0.32, 0.02, 0.32, 3) == 3);
  CHECK(quantize_level(-1.0, 0.02, 0.32, 3) == 0);
  CHECK(quantize_level(1.0, 0.02, 0.32, 3) == 3);
  CHECK(quantize_level(0.9, 0.02, 0.32, 0) == 0);
  CHECK_THROWS_AS(quantize_level(0.1, 0.3, 0.3, 3), InvalidInput);
  CHECK_THROWS_AS(quantize_level(0.1, 0.0, 1.0, -1), InvalidInput);
}

TEST_CASE("quantizer is monotone and onto") {
  int prev = 0;
  std::vector<int> seen(4, 0);
  for (int i = 0; i <= 3000; ++i) {
    const double s = 0.02 + 0.3 * i / 3000.0;
    const int l = quantize_level(s, 0.02, 0.32, 3);
    CHECK(l >= prev);
    prev = l;
    ++seen[static_cast<std::size_t>(l)];
  }
  for (int c : seen) CHECK(c > 0);
}

TEST_CASE("score of identical and orthogonal embeddings") {
  const AudioClip audio = afe_test::tone(500.0, 0.3, kSegmentSamples);
  const ControlTrack track = ControlTrack::zeros(160);
  CHECK(editability_score(FixedOracle(unit(2), unit(2)), audio, track) == doctest::Approx(1.0));
  CHECK(editability_score(FixedOracle(unit(2), unit(5)), audio, track) == 0.0);
}

TEST_CASE("8 s inputs use exactly 4 windows; remainders are dropped") {
  CountingOracle o;
  const auto ws = windowed_similarity(o, afe_test::tone(500.0, 0.3, kSegmentSamples), ControlTrack::zeros(160));
  CHECK(ws.windows() == 4);
  CHECK(o.calls == 4);
  CHECK(o.last_index == 3);
  CountingOracle o2;
  const auto ws2 = windowed_similarity(o2, afe_test::tone(500.0, 0.3, 16000 * 5), ControlTrack::zeros(100));
  CHECK(ws2.windows() == 2);
  CHECK_THROWS_AS(windowed_similarity(o2, afe_test::tone(500.0, 0.3, 16000), ControlTrack::zeros(20)), InvalidInput);
  CHECK_THROWS_AS(windowed_similarity(o2, afe_test::tone(500.0, 0.3, kSegmentSamples), ControlTrack::zeros(100)),
                  InvalidInput);
}

TEST_CASE("fingerprint oracle: band layout and degenerate inputs") {
  const auto& edges = FingerprintOracle::band_edges();
  CHECK(edges.front() == 0.0);
  CHECK(edges[1] == 250.0);
  CHECK(edges.back() == 8000.0);
  const FingerprintOracle& o = default_oracle();
  AudioClip silent;
  silent.samples.assign(32000, 0.0);
  const Eigen::VectorXd e = o.embed_audio(silent, 0);
  CHECK(e.norm() == doctest::Approx(1.0));
  CHECK((e.array() - 1.0 / std::sqrt(8.0)).abs().maxCoeff() < 1e-12);
  CHECK((o.embed_visual(ControlTrack::zeros(40), 0).array() - 1.0 / std::sqrt(8.0)).abs().maxCoeff() < 1e-12);
  const Eigen::VectorXd low = o.embed_audio(afe_test::tone(200.0, 0.5, 32000), 0);
  CHECK(low(0) >= 0.9);
  CHECK(low.norm() == doctest::Approx(1.0));
}

TEST_CASE("each class template is closest to its own class audio") {
  const FingerprintOracle& o = default_oracle();
  for (int k = 0; k < kNumClasses; ++k) {
    SceneSpec spec = random_scene_spec(k, 100 + k, 2.0);
    spec.envelope = Envelope::constant(0.8, 2.0);
    const Eigen::VectorXd a = o.embed_audio(synth_scene(spec).audio, 0);
    const double own = a.dot(o.class_template(k));
    for (int j = 0; j < kNumClasses; ++j) CHECK(own >= a.dot(o.class_template(j)) - 1e-12);
  }
}

TEST_CASE("scores are amplitude invariant and separate genuine from mismatched pairs") {
  const FingerprintOracle& o = default_oracle();
  const Scene s0 = synth_scene(random_scene_spec(0, 5));
  const Scene s5 = synth_scene(random_scene_spec(5, 6));
  AudioClip quiet = s0.audio;
  for (auto& v : quiet.samples) v *= 0.1;
  CHECK(std::abs(editability_score(o, quiet, s0.control) - editability_score(o, s0.audio, s0.control)) < 1e-9);
  CHECK(editability_score(o, s0.audio, s0.control) > editability_score(o, s0.audio, s5.control));
  for (int k = 0; k < kNumClasses; ++k) {
    const Scene g = synth_scene(random_scene_spec(k, 300 + k));
    const double genuine = editability_score(o, g.audio, g.control);
    CHECK(genuine <= 1.0);
    for (int j = 0; j < kNumClasses; ++j) {
      if (j == k) continue;
      const Scene m = synth_scene(random_scene_spec(j, 400 + j));
      CHECK(genuine > editability_score(o, g.audio, m.control));
    }
  }
}

TEST_CASE("plan_edit composes score and quantizer") {
  const FingerprintOracle& o = default_oracle();
  const Scene s = synth_scene(random_scene_spec(3, 8));
  const EditPlan a = plan_edit(o, s.audio, s.control, 3, GuidanceWeights{});
  const EditPlan b = plan_edit(o, s.audio, s.control, 3, GuidanceWeights{});
  CHECK(a.score == b.score);
  CHECK(a.level == b.level);
  CHECK(a.level == quantize_level(a.score, 0.02, 0.32, 3));
  CHECK(a.windows == 4);
  CHECK(a.s_min == 0.02);
  CHECK(a.s_max == 0.32);
  CHECK(plan_edit(o, s.audio, s.control, 0, GuidanceWeights{}).level == 0);
}

TEST_CASE("external oracle reads per-window embeddings") {
  TempDir dir("oracle");
  {
    std::ofstream f(dir / "emb.json");
    f << R"({"audio": [[1,0],[0,2],[1,1],[3,0]], "visual": [[1,0],[0,1],[1,0],[0,1]], "prompts": {"2": [0, 5]}})";
  }
  const ExternalOracle o(dir / "emb.json");
  CHECK(o.dim() == 2);
  const double s = editability_score(o, afe_test::tone(100.0, 0.1, kSegmentSamples), ControlTrack::zeros(160));
  CHECK(s == doctest::Approx((1.0 + 1.0 + std::sqrt(0.5) + 0.0) / 4.0));
  CHECK(o.embed_prompt(PromptLabel{2})(1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(o.embed_prompt(PromptLabel{1}), UnsupportedError);
  CHECK_THROWS_AS(ExternalOracle(dir / "none.json"), IoError);
  CHECK_THROWS_AS(make_oracle("imagebind"), ConfigError);
  CHECK_THROWS_AS(make_oracle("external"), ConfigError);
  CHECK(make_oracle("fingerprint")->dim() == 8);
}
