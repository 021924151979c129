#include "afe/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "afe/errors.hpp"

namespace afe {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "low_tone", "high_tone", "up_chirp", "down_chirp",
    "noise_burst", "low_noise", "impulse_train", "am_tone"};
}  // namespace

std::string_view class_name(int class_id) {
  if (class_id < 0 || class_id >= kNumClasses) return "null";
  return kClassNames[static_cast<std::size_t>(class_id)];
}

ControlTrack ControlTrack::zeros(Eigen::Index n_frames, double frame_rate) {
  ControlTrack c;
  c.frames = Eigen::MatrixXd::Zero(kNumClasses, n_frames);
  c.frame_rate = frame_rate;
  c.class_id = 0;
  return c;
}

double Envelope::at(double t) const {
  if (points.empty()) return 0.0;
  if (t <= points.front().time) return points.front().level;
  if (t >= points.back().time) return points.back().level;
  const auto it = std::upper_bound(points.begin(), points.end(), t,
                                   [](double v, const EnvelopePoint& p) { return v < p.time; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double u = (t - a.time) / (b.time - a.time);
  return a.level + u * (b.level - a.level);
}

bool Envelope::valid(double duration) const {
  if (points.empty()) return false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].time < 0.0 || points[i].time > duration) return false;
    if (points[i].level < 0.0 || !std::isfinite(points[i].level)) return false;
    if (i > 0 && !(points[i].time > points[i - 1].time)) return false;
  }
  return true;
}

Envelope Envelope::constant(double level, double duration) {
  return Envelope{{{0.0, level}, {duration, level}}};
}

Carrier nominal_carrier(int class_id) {
  Carrier c;
  switch (static_cast<EventClass>(class_id)) {
    case EventClass::LowTone:
      c = {CarrierKind::Tone, 200.0, 200.0, 0.0, 0.0};
      break;
    case EventClass::HighTone:
      c = {CarrierKind::Tone, 6000.0, 6000.0, 0.0, 0.0};
      break;
    case EventClass::UpChirp:
      c = {CarrierKind::Chirp, 500.0, 2000.0, 1.0, 0.0};
      break;
    case EventClass::DownChirp:
      c = {CarrierKind::Chirp, 5000.0, 2500.0, 1.0, 0.0};
      break;
    case EventClass::NoiseBurst:
      c = {CarrierKind::NoiseBand, 0.0, 8000.0, 0.0, 0.0};
      break;
    case EventClass::LowNoise:
      c = {CarrierKind::NoiseBand, 100.0, 600.0, 0.0, 0.0};
      break;
    case EventClass::ImpulseTrain:
      c = {CarrierKind::ImpulseTrain, 1200.0, 1200.0, 3.0, 0.0, 0.02};
      break;
    case EventClass::AmTone:
      c = {CarrierKind::Tone, 1000.0, 1000.0, 8.0, 0.8};
      break;
    default:
      throw InvalidInput("unknown class id");
  }
  return c;
}

Carrier class_carrier(int class_id, Rng& rng) {
  Carrier c = nominal_carrier(class_id);
  const double jitter = rng.uniform(0.92, 1.08);
  switch (c.kind) {
    case CarrierKind::Tone:
      c.freq_lo *= jitter;
      c.freq_hi = c.freq_lo;
      if (c.depth > 0.0) c.rate = rng.uniform(6.0, 10.0);
      break;
    case CarrierKind::Chirp:
      c.freq_lo *= jitter;
      c.freq_hi *= jitter;
      c.rate = rng.uniform(0.7, 1.5);
      break;
    case CarrierKind::NoiseBand:
      break;
    case CarrierKind::ImpulseTrain:
      c.freq_lo *= jitter;
      c.freq_hi = c.freq_lo;
      c.rate = rng.uniform(2.0, 5.0);
      break;
  }
  return c;
}

Envelope random_envelope(double duration, Rng& rng) {
  const int n_events = rng.uniform_int(2, 4);
  const double slot = duration / n_events;
  Envelope env;
  for (int e = 0; e < n_events; ++e) {
    const double start = e * slot;
    const double onset = start + rng.uniform(0.0, 0.3) * slot;
    const double attack = rng.uniform(0.02, 0.25);
    const double decay = rng.uniform(0.1, 0.6);
    const double room = start + slot - onset - attack - decay - 0.05;
    const double sustain = std::max(0.05, rng.uniform(0.3, 0.95) * room);
    const double level = rng.uniform(0.4, 1.0);
    const double t0 = onset;
    const double t1 = t0 + attack;
    const double t2 = t1 + sustain;
    const double t3 = std::min(t2 + decay, duration);
    if (env.points.empty() && t0 > 0.0) env.points.push_back({0.0, 0.0});
    env.points.push_back({t0, 0.0});
    env.points.push_back({t1, level});
    env.points.push_back({t2, level});
    if (t3 > t2) env.points.push_back({t3, 0.0});
  }
  if (env.points.back().time < duration) env.points.push_back({duration, 0.0});
  return env;
}

SceneSpec random_scene_spec(int class_id, std::uint64_t seed, double duration) {
  if (class_id < 0 || class_id >= kNumClasses) throw InvalidInput("class id out of range");
  Rng rng(derive_seed(seed, "scene"));
  SceneSpec spec;
  spec.class_id = class_id;
  spec.seed = seed;
  spec.duration = duration;
  spec.carrier = class_carrier(class_id, rng);
  spec.envelope = random_envelope(duration, rng);
  return spec;
}

namespace {

// Band-limited noise as a sum of random-phase partials (exactly band-limited).
std::vector<double> partial_noise(std::size_t n, int rate, double lo, double hi, Rng& rng) {
  constexpr int kPartials = 64;
  std::vector<double> freq(kPartials), phase(kPartials);
  for (int k = 0; k < kPartials; ++k) {
    freq[k] = rng.uniform(lo, hi);
    phase[k] = rng.uniform(0.0, kTwoPi);
  }
  std::vector<double> out(n, 0.0);
  const double amp = std::sqrt(2.0 / kPartials) * 0.3;
  for (int k = 0; k < kPartials; ++k) {
    const double w = kTwoPi * freq[k] / rate;
    for (std::size_t i = 0; i < n; ++i) out[i] += amp * std::sin(w * static_cast<double>(i) + phase[k]);
  }
  return out;
}

// Returns the raw carrier and its activity (1 except for impulse trains).
void render_carrier(const SceneSpec& spec, std::vector<double>& carrier, std::vector<double>& activity) {
  const std::size_t n = static_cast<std::size_t>(std::llround(spec.duration * spec.sample_rate));
  const double sr = spec.sample_rate;
  const Carrier& c = spec.carrier;
  Rng rng(derive_seed(spec.seed, "carrier"));
  carrier.assign(n, 0.0);
  activity.assign(n, 1.0);

  switch (c.kind) {
    case CarrierKind::Tone: {
      const double phase0 = rng.uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sr;
        double s = std::sin(kTwoPi * c.freq_lo * t + phase0);
        if (c.depth > 0.0) s *= 1.0 - c.depth * 0.5 * (1.0 - std::cos(kTwoPi * c.rate * t));
        carrier[i] = s;
      }
      break;
    }
    case CarrierKind::Chirp: {
      // Exponential sweep from freq_lo to freq_hi, restarted every 1/rate seconds.
      const double period = 1.0 / c.rate;
      const double k = std::log(c.freq_hi / c.freq_lo) / period;
      double phase = rng.uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sr;
        const double local = std::fmod(t, period);
        const double f = c.freq_lo * std::exp(k * local);
        carrier[i] = std::sin(phase);
        phase = std::fmod(phase + kTwoPi * f / sr, kTwoPi);
      }
      break;
    }
    case CarrierKind::NoiseBand: {
      if (c.freq_lo <= 0.0 && c.freq_hi >= 0.5 * sr) {
        for (auto& s : carrier) s = 0.3 * rng.normal();
      } else {
        carrier = partial_noise(n, spec.sample_rate, c.freq_lo, std::min(c.freq_hi, 0.5 * sr), rng);
      }
      break;
    }
    case CarrierKind::ImpulseTrain: {
      const double period = 1.0 / c.rate;
      const double offset = rng.uniform(0.0, period);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sr;
        const double since = t < offset ? -1.0 : std::fmod(t - offset, period);
        if (since < 0.0) {
          activity[i] = 0.0;
          continue;
        }
        const double a = std::exp(-since / c.decay_s);
        activity[i] = a;
        carrier[i] = a * std::sin(kTwoPi * c.freq_lo * since);
      }
      break;
    }
  }
}

}  // namespace

Scene synth_scene(const SceneSpec& spec) {
  if (spec.class_id < 0 || spec.class_id >= kNumClasses) throw InvalidInput("class id out of range");
  if (!(spec.duration > 0.0) || spec.sample_rate <= 0) throw InvalidInput("invalid duration or rate");
  if (!spec.envelope.valid(spec.duration)) throw InvalidInput("invalid envelope");

  std::vector<double> carrier, activity;
  render_carrier(spec, carrier, activity);

  Scene scene;
  scene.prompt.class_id = spec.class_id;
  scene.audio.sample_rate = spec.sample_rate;
  scene.audio.samples.resize(carrier.size());
  for (std::size_t i = 0; i < carrier.size(); ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate;
    scene.audio.samples[i] = std::clamp(carrier[i] * spec.envelope.at(t), -1.0, 1.0);
  }

  const auto n_frames = static_cast<Eigen::Index>(std::llround(spec.duration * kControlFrameRate));
  scene.control = ControlTrack::zeros(n_frames);
  scene.control.class_id = spec.class_id;
  const double samples_per_frame = spec.sample_rate / kControlFrameRate;
  for (Eigen::Index j = 0; j < n_frames; ++j) {
    const auto b = static_cast<std::size_t>(std::llround(j * samples_per_frame));
    const auto e = std::min(activity.size(), static_cast<std::size_t>(std::llround((j + 1) * samples_per_frame)));
    double act = 0.0;
    for (std::size_t i = b; i < e; ++i) act = std::max(act, activity[i]);
    scene.control.frames(spec.class_id, j) = spec.envelope.at(j / kControlFrameRate) * act;
  }
  return scene;
}

}  // namespace afe
