// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Audio frontend: waveform container, WAV I/O, resampling, fixed-window
// padding and the 128-bin log-mel spectrogram the encoder consumes.

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace audapt {

struct AudioClip {
  std::vector<float> samples;
  int sample_rate_hz = 0;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  // Throws InvalidAudio when empty, non-finite, or the rate is not positive.
  void validate() const;
};

struct FrontendConfig {
  int target_rate_hz = 16000;
  double window_s = 30.0;
  std::size_t n_fft = 400;
  std::size_t hop = 160;
  std::size_t n_mels = 128;
  double log_floor = 1e-10;

  std::size_t window_samples() const;
  std::size_t n_frames() const { return window_samples() / hop; }
  // Throws ConfigError on a violated invariant.
  void validate() const;
};

// Row-major [n_mels x n_frames].
struct MelSpectrogram {
  std::vector<float> values;
  std::size_t n_mels = 0;
  std::size_t n_frames = 0;
  // Leading frames that overlap the clip before zero-padding.
  std::size_t content_frames = 0;
  static constexpr int kFrameRateHz = 100;

  float at(std::size_t mel, std::size_t frame) const {
    return values[mel * n_frames + frame];
  }
};

// Reads 16-bit PCM or 32-bit float WAV; channels are averaged to mono.
AudioClip read_wav(const std::filesystem::path& path);
// Writes 16-bit PCM mono, clipping to [-1, 1].
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

// Linear-interpolation resampler. Output length is the input duration
// rounded to the nearest target sample.
AudioClip resample(const AudioClip& clip, int target_rate_hz);

// Right zero-pads or truncates to round(window_s * rate) samples.
AudioClip pad_or_truncate(const AudioClip& clip, double window_s);

// Slaney-style mel filterbank, [n_mels x (n_fft/2 + 1)], area normalized.
std::vector<double> mel_filterbank(int sample_rate_hz, std::size_t n_fft,
                                   std::size_t n_mels);

// log10(max(mel power, floor)) before normalization, [n_mels x n_frames].
MelSpectrogram log_mel_unnormalized(const AudioClip& clip,
                                    const FrontendConfig& cfg);

// Subtract the global max, clamp to [-8, 0], then (x + 4) / 4; the result
// lies in [-1, 1]. In place.
void normalize_log_mel(MelSpectrogram& mel);

// Full frontend for a clip already at the target rate and window length.
MelSpectrogram log_mel(const AudioClip& clip, const FrontendConfig& cfg);

// read_wav -> resample -> pad_or_truncate -> log_mel.
MelSpectrogram mel_from_file(const std::filesystem::path& path,
                             const FrontendConfig& cfg);
MelSpectrogram mel_from_clip(const AudioClip& clip, const FrontendConfig& cfg);

}  // namespace audapt
