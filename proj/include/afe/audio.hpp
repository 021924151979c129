#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace afe {

inline constexpr int kSampleRate = 16000;
inline constexpr double kSegmentSeconds = 8.0;
inline constexpr int kSegmentSamples = 128000;

// Mono PCM clip; samples nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  // Samples [begin, begin + count) as a new clip.
  AudioClip slice(std::size_t begin, std::size_t count) const;
};

enum class WavEncoding { Pcm16, Pcm24, Float32 };

// Reads 8/16/24-bit integer or 32-bit float PCM; channels are averaged.
// Integer samples are scaled by 1 / 2^(bits-1).
AudioClip load_wav(const std::filesystem::path& path);

// Samples are clamped to [-1, 1] before quantization.
void save_wav(const std::filesystem::path& path, const AudioClip& clip,
              WavEncoding encoding = WavEncoding::Pcm16);

// Windowed-sinc resampling (Kaiser window, beta 8.6, 64 taps).
AudioClip resample(const AudioClip& clip, int target_rate);

// Resamples, then tiles the result into non-overlapping segments of exactly
// target_rate * segment_s samples. The trailing remainder is dropped.
std::vector<AudioClip> resample_and_crop(const AudioClip& clip, int target_rate,
                                         double segment_s);

}  // namespace afe
