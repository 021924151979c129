#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "afe/audio.hpp"
#include "afe/rng.hpp"

namespace afe {

inline constexpr int kNumClasses = 8;
inline constexpr double kControlFrameRate = 20.0;

// Synthetic event types, each occupying a distinct spectral region.
enum class EventClass : int {
  LowTone = 0,
  HighTone,
  UpChirp,
  DownChirp,
  NoiseBurst,
  LowNoise,
  ImpulseTrain,
  AmTone,
};

std::string_view class_name(int class_id);

struct PromptLabel {
  static constexpr int kNull = -1;
  int class_id = kNull;

  bool is_null() const { return class_id == kNull; }
  static PromptLabel null() { return {}; }
  bool operator==(const PromptLabel&) const = default;
};

// Per-frame event intensities, one channel per class. Column j covers
// [j / frame_rate, (j + 1) / frame_rate).
struct ControlTrack {
  Eigen::MatrixXd frames;  // kNumClasses x n_frames
  double frame_rate = kControlFrameRate;
  int class_id = 0;

  Eigen::Index n_frames() const { return frames.cols(); }
  double duration() const { return static_cast<double>(frames.cols()) / frame_rate; }
  static ControlTrack zeros(Eigen::Index n_frames, double frame_rate = kControlFrameRate);
};

struct EnvelopePoint {
  double time = 0.0;
  double level = 0.0;
};

// Piecewise-linear amplitude envelope; held constant outside the breakpoints.
struct Envelope {
  std::vector<EnvelopePoint> points;

  double at(double t) const;
  bool valid(double duration) const;
  static Envelope constant(double level, double duration);
};

enum class CarrierKind { Tone, Chirp, NoiseBand, ImpulseTrain };

struct Carrier {
  CarrierKind kind = CarrierKind::Tone;
  double freq_lo = 440.0;   // tone frequency, chirp start, band low edge, ping frequency
  double freq_hi = 440.0;   // chirp end, band high edge
  double rate = 0.0;        // AM rate, sweep repetitions per second, impulses per second
  double depth = 0.0;       // AM depth (tone only)
  double decay_s = 0.02;    // ping decay constant (impulse train only)
};

struct SceneSpec {
  int class_id = 0;
  Envelope envelope;
  Carrier carrier;
  std::uint64_t seed = 0;
  double duration = kSegmentSeconds;
  int sample_rate = kSampleRate;
};

struct Scene {
  AudioClip audio;
  ControlTrack control;
  PromptLabel prompt;
};

// Nominal carrier of a class with per-scene jitter drawn from rng.
Carrier class_carrier(int class_id, Rng& rng);
Carrier nominal_carrier(int class_id);
// Multi-event attack/sustain/decay envelope.
Envelope random_envelope(double duration, Rng& rng);
SceneSpec random_scene_spec(int class_id, std::uint64_t seed, double duration = kSegmentSeconds);

// Audio is carrier x envelope. The control track's active channel is the
// envelope sampled at the start of each 20 fps frame, multiplied by the
// carrier's peak activity within the frame (1 except for impulse trains,
// where it is the ping amplitude).
Scene synth_scene(const SceneSpec& spec);

}  // namespace afe
