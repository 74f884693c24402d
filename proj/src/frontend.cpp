// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "audapt/audio.hpp"
#include "audapt/error.hpp"
#include "audapt/kernels.hpp"

namespace audapt {

void AudioClip::validate() const {
  if (sample_rate_hz <= 0)
    throw InvalidAudio("sample rate must be positive, got " +
                       std::to_string(sample_rate_hz));
  if (samples.empty()) throw InvalidAudio("empty waveform");
  for (const float s : samples)
    if (!std::isfinite(s)) throw InvalidAudio("non-finite sample");
}

std::size_t FrontendConfig::window_samples() const {
  return static_cast<std::size_t>(std::llround(window_s * target_rate_hz));
}

void FrontendConfig::validate() const {
  if (target_rate_hz <= 0) throw ConfigError("target_rate_hz must be positive");
  if (!(window_s > 0)) throw ConfigError("window_s must be positive");
  const double exact = window_s * target_rate_hz;
  if (std::abs(exact - std::round(exact)) > 1e-6 || hop == 0 ||
      window_samples() % hop != 0)
    throw ConfigError("hop must divide target_rate_hz * window_s");
  if (n_fft < hop) throw ConfigError("n_fft must be >= hop");
  if (n_fft >= window_samples()) throw ConfigError("window shorter than n_fft");
  if (n_mels == 0) throw ConfigError("n_mels must be positive");
  if (!(log_floor > 0)) throw ConfigError("log_floor must be positive");
}

AudioClip resample(const AudioClip& clip, int target_rate_hz) {
  clip.validate();
  if (target_rate_hz <= 0) throw InvalidAudio("target rate must be positive");
  if (clip.sample_rate_hz == target_rate_hz) return clip;
  const std::size_t n = clip.samples.size();
  const auto out_len = static_cast<std::size_t>(std::llround(
      static_cast<double>(n) * target_rate_hz / clip.sample_rate_hz));
  AudioClip out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(std::max<std::size_t>(out_len, 1));
  const double step = static_cast<double>(clip.sample_rate_hz) / target_rate_hz;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double x = static_cast<double>(i) * step;
    const auto i0 = static_cast<std::size_t>(x);
    if (i0 + 1 >= n) {
      out.samples[i] = clip.samples[n - 1];
      continue;
    }
    const double frac = x - static_cast<double>(i0);
    out.samples[i] = static_cast<float>(clip.samples[i0] * (1.0 - frac) +
                                        clip.samples[i0 + 1] * frac);
  }
  return out;
}

AudioClip pad_or_truncate(const AudioClip& clip, double window_s) {
  const auto len = static_cast<std::size_t>(std::llround(window_s * clip.sample_rate_hz));
  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.samples.assign(clip.samples.begin(),
                     clip.samples.begin() + std::min(len, clip.samples.size()));
  out.samples.resize(len, 0.0f);
  return out;
}

namespace {

double hz_to_mel(double hz) {
  constexpr double kSp = 200.0 / 3.0;
  constexpr double kMinLogHz = 1000.0;
  constexpr double kMinLogMel = kMinLogHz / kSp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < kMinLogHz) return hz / kSp;
  return kMinLogMel + std::log(hz / kMinLogHz) / logstep;
}

double mel_to_hz(double mel) {
  constexpr double kSp = 200.0 / 3.0;
  constexpr double kMinLogHz = 1000.0;
  constexpr double kMinLogMel = kMinLogHz / kSp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < kMinLogMel) return mel * kSp;
  return kMinLogHz * std::exp(logstep * (mel - kMinLogMel));
}

// DFT basis [n_fft x 2*bins]: cosine columns, then sine columns, with the
// periodic Hann window folded in.
struct StftPlan {
  std::size_t bins;
  std::vector<double> basis;
};

const StftPlan& stft_plan(std::size_t n_fft) {
  static std::mutex mu;
  static std::map<std::size_t, StftPlan> plans;
  std::lock_guard lock(mu);
  auto it = plans.find(n_fft);
  if (it != plans.end()) return it->second;
  StftPlan plan;
  plan.bins = n_fft / 2 + 1;
  const std::size_t width = 2 * plan.bins;
  plan.basis.resize(n_fft * width);
  for (std::size_t n = 0; n < n_fft; ++n) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / n_fft);
    for (std::size_t k = 0; k < plan.bins; ++k) {
      const double phase = 2.0 * std::numbers::pi * double((n * k) % n_fft) / n_fft;
      plan.basis[n * width + k] = w * std::cos(phase);
      plan.basis[n * width + plan.bins + k] = -w * std::sin(phase);
    }
  }
  return plans.emplace(n_fft, std::move(plan)).first->second;
}

}  // namespace

std::vector<double> mel_filterbank(int sample_rate_hz, std::size_t n_fft,
                                   std::size_t n_mels) {
  const std::size_t bins = n_fft / 2 + 1;
  const double nyquist = sample_rate_hz / 2.0;
  const double mel_max = hz_to_mel(nyquist);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / double(n_mels + 1));
  std::vector<double> fb(n_mels * bins, 0.0);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    const double enorm = 2.0 / (hi - lo);
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = nyquist * static_cast<double>(k) / double(bins - 1);
      const double rise = (f - lo) / (center - lo);
      const double fall = (hi - f) / (hi - center);
      fb[m * bins + k] = enorm * std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

MelSpectrogram log_mel_unnormalized(const AudioClip& clip,
                                    const FrontendConfig& cfg) {
  cfg.validate();
  clip.validate();
  if (clip.sample_rate_hz != cfg.target_rate_hz)
    throw InvalidAudio("clip at " + std::to_string(clip.sample_rate_hz) +
                       " Hz, frontend expects " +
                       std::to_string(cfg.target_rate_hz));
  const std::size_t n = clip.samples.size();
  if (n != cfg.window_samples())
    throw InvalidAudio("clip has " + std::to_string(n) + " samples, expected " +
                       std::to_string(cfg.window_samples()));

  const std::size_t half = cfg.n_fft / 2;
  const std::size_t frames = n / cfg.hop;
  // Reflect-padded signal so frame t is centred on sample t * hop.
  std::vector<double> padded(n + 2 * half);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) - std::ptrdiff_t(half);
    if (src < 0) src = -src;
    if (src >= std::ptrdiff_t(n)) src = 2 * std::ptrdiff_t(n) - 2 - src;
    padded[i] = clip.samples[static_cast<std::size_t>(src)];
  }
  std::vector<double> framed(frames * cfg.n_fft);
  for (std::size_t t = 0; t < frames; ++t)
    std::copy_n(padded.begin() + t * cfg.hop, cfg.n_fft,
                framed.begin() + t * cfg.n_fft);

  const StftPlan& plan = stft_plan(cfg.n_fft);
  const std::size_t bins = plan.bins;
  std::vector<double> spec(frames * 2 * bins);
  kernels::parallel::gemm_nn<double>(frames, 2 * bins, cfg.n_fft, framed,
                                     plan.basis, spec, false);
  std::vector<double> power(frames * bins);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t k = 0; k < bins; ++k) {
      const double re = spec[t * 2 * bins + k];
      const double im = spec[t * 2 * bins + bins + k];
      power[t * bins + k] = re * re + im * im;
    }

  const auto fb = mel_filterbank(cfg.target_rate_hz, cfg.n_fft, cfg.n_mels);
  // [n_mels x bins] * [bins x frames] keeps the mel-major output layout.
  std::vector<double> power_t(bins * frames);
  kernels::parallel::transpose<double>(frames, bins, power, power_t);
  std::vector<double> mel(cfg.n_mels * frames);
  kernels::parallel::gemm_nn<double>(cfg.n_mels, frames, bins, fb, power_t, mel,
                                     false);

  MelSpectrogram out;
  out.n_mels = cfg.n_mels;
  out.n_frames = frames;
  out.content_frames = frames;
  out.values.resize(mel.size());
  for (std::size_t i = 0; i < mel.size(); ++i)
    out.values[i] = static_cast<float>(std::log10(std::max(mel[i], cfg.log_floor)));
  return out;
}

void normalize_log_mel(MelSpectrogram& mel) {
  const float mx = *std::max_element(mel.values.begin(), mel.values.end());
  for (auto& v : mel.values) v = (std::max(v - mx, -8.0f) + 4.0f) / 4.0f;
}

MelSpectrogram log_mel(const AudioClip& clip, const FrontendConfig& cfg) {
  MelSpectrogram mel = log_mel_unnormalized(clip, cfg);
  normalize_log_mel(mel);
  return mel;
}

MelSpectrogram mel_from_clip(const AudioClip& clip, const FrontendConfig& cfg) {
  const AudioClip at_rate = resample(clip, cfg.target_rate_hz);
  MelSpectrogram mel = log_mel(pad_or_truncate(at_rate, cfg.window_s), cfg);
  const std::size_t covered = (at_rate.samples.size() + cfg.hop - 1) / cfg.hop;
  mel.content_frames = std::clamp<std::size_t>(covered, 1, mel.n_frames);
  return mel;
}

MelSpectrogram mel_from_file(const std::filesystem::path& path,
                             const FrontendConfig& cfg) {
  return mel_from_clip(read_wav(path), cfg);
}

}  // namespace audapt
