// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "audapt/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "audapt/error.hpp"
#include "audapt/rng.hpp"

namespace audapt {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
using Signal = std::vector<double>;

std::size_t n_samples(double seconds, int rate) {
  return static_cast<std::size_t>(std::llround(std::max(0.0, seconds) * rate));
}

bool chance(std::mt19937_64& rng, double p) { return unit_double(rng) < p; }

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  return items[uniform_index(rng, items.size())];
}

// RBJ cookbook biquads, direct form II transposed.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  double z1 = 0, z2 = 0;

  double step(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
  void set(double nb0, double nb1, double nb2, double a0, double na1, double na2) {
    b0 = nb0 / a0, b1 = nb1 / a0, b2 = nb2 / a0, a1 = na1 / a0, a2 = na2 / a0;
  }
  // Constant 0 dB peak gain.
  void bandpass(double rate, double f, double q) {
    f = std::clamp(f, 20.0, 0.45 * rate);
    const double w = kTwoPi * f / rate, alpha = std::sin(w) / (2 * q);
    set(alpha, 0, -alpha, 1 + alpha, -2 * std::cos(w), 1 - alpha);
  }
  void lowpass(double rate, double f, double q = std::numbers::sqrt2 / 2) {
    f = std::clamp(f, 20.0, 0.45 * rate);
    const double w = kTwoPi * f / rate, alpha = std::sin(w) / (2 * q), c = std::cos(w);
    set((1 - c) / 2, 1 - c, (1 - c) / 2, 1 + alpha, -2 * c, 1 - alpha);
  }
  void highpass(double rate, double f, double q = std::numbers::sqrt2 / 2) {
    f = std::clamp(f, 20.0, 0.45 * rate);
    const double w = kTwoPi * f / rate, alpha = std::sin(w) / (2 * q), c = std::cos(w);
    set((1 + c) / 2, -(1 + c), (1 + c) / 2, 1 + alpha, -2 * c, 1 - alpha);
  }
};

void run(Signal& x, Biquad f) {
  for (auto& v : x) v = f.step(v);
}

Signal lowpassed(Signal x, double rate, double f) {
  Biquad b;
  b.lowpass(rate, f);
  run(x, b);
  return x;
}

Signal highpassed(Signal x, double rate, double f) {
  Biquad b;
  b.highpass(rate, f);
  run(x, b);
  return x;
}

Signal bandpassed(Signal x, double rate, double f, double q) {
  Biquad b;
  b.bandpass(rate, f, q);
  run(x, b);
  return x;
}

Signal white(std::size_t n, std::mt19937_64& rng) {
  Signal x(n);
  for (auto& v : x) v = standard_normal(rng);
  return x;
}

void mix_into(Signal& dst, const Signal& src, std::ptrdiff_t offset, double gain) {
  for (std::size_t i = 0; i < src.size(); ++i) {
    const std::ptrdiff_t j = offset + static_cast<std::ptrdiff_t>(i);
    if (j >= 0 && j < static_cast<std::ptrdiff_t>(dst.size())) dst[j] += gain * src[i];
  }
}

void decay(Signal& x, int rate, double tau) {
  const double k = std::exp(-1.0 / (tau * rate));
  double env = 1.0;
  for (auto& v : x) v *= env, env *= k;
}

void fade_edges(Signal& x, std::size_t ramp) {
  ramp = std::min(ramp, x.size() / 2);
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = static_cast<double>(i) / static_cast<double>(ramp);
    x[i] *= g;
    x[x.size() - 1 - i] *= g;
  }
}

double rms(const Signal& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

double peak(const Signal& x) {
  double p = 0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

// Background noise at a given signal-to-noise ratio in dB.
void add_noise_floor(Signal& x, int rate, double snr_db, std::mt19937_64& rng) {
  const double level = rms(x);
  if (level <= 0) return;
  Signal n = lowpassed(white(x.size(), rng), rate, uniform_real(rng, 2000, 6000));
  const double nl = rms(n);
  if (nl <= 0) return;
  const double g = level / nl * std::pow(10.0, -snr_db / 20.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += g * n[i];
}

AudioClip finish(const Signal& x, int rate, double target_peak) {
  AudioClip clip;
  clip.sample_rate_hz = rate;
  const double p = peak(x);
  const double g = p > 0 ? target_peak / p : 0.0;
  clip.samples.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) clip.samples[i] = static_cast<float>(g * x[i]);
  return clip;
}

double midi_hz(double note) { return 440.0 * std::pow(2.0, (note - 69.0) / 12.0); }

// ---------------------------------------------------------------------------
// Speech: a parallel-formant synthesizer driven by spelled letters.

enum class PhoneKind { kVowel, kApprox, kNasal, kFricative, kAspirate, kStop };

struct Phone {
  PhoneKind kind;
  double f1, f2, f3;
  double noise_hz = 0;  // fricative or burst centre
  bool voiced = true;
  double noise_gain = 0.5;
};

const Phone& phone_for(char c) {
  static const std::array<Phone, 26> table = {{
      {PhoneKind::kVowel, 730, 1090, 2440},                          // a
      {PhoneKind::kStop, 500, 1500, 2500, 800, true},                // b
      {PhoneKind::kStop, 500, 1800, 2500, 2000, false},              // c
      {PhoneKind::kStop, 500, 1700, 2600, 4000, true},               // d
      {PhoneKind::kVowel, 530, 1840, 2480},                          // e
      {PhoneKind::kFricative, 500, 1500, 2500, 3500, false, 0.25},   // f
      {PhoneKind::kStop, 500, 1800, 2500, 2000, true},               // g
      {PhoneKind::kAspirate, 600, 1500, 2500, 0, false, 0.35},       // h
      {PhoneKind::kVowel, 270, 2290, 3010},                          // i
      {PhoneKind::kApprox, 280, 2250, 2900},                         // j
      {PhoneKind::kStop, 500, 1800, 2500, 2000, false},              // k
      {PhoneKind::kApprox, 360, 1300, 2700},                         // l
      {PhoneKind::kNasal, 250, 1100, 2200},                          // m
      {PhoneKind::kNasal, 250, 1700, 2600},                          // n
      {PhoneKind::kVowel, 570, 840, 2410},                           // o
      {PhoneKind::kStop, 500, 1500, 2500, 800, false},               // p
      {PhoneKind::kStop, 500, 1800, 2500, 2000, false},              // q
      {PhoneKind::kApprox, 420, 1300, 1600},                         // r
      {PhoneKind::kFricative, 500, 1500, 2500, 6000, false, 0.5},    // s
      {PhoneKind::kStop, 500, 1700, 2600, 4000, false},              // t
      {PhoneKind::kVowel, 300, 870, 2240},                           // u
      {PhoneKind::kFricative, 500, 1500, 2500, 3500, true, 0.2},     // v
      {PhoneKind::kApprox, 300, 610, 2200},                          // w
      {PhoneKind::kFricative, 500, 1500, 2500, 4500, false, 0.45},   // x
      {PhoneKind::kVowel, 360, 2000, 2600},                          // y
      {PhoneKind::kFricative, 500, 1500, 2500, 5500, true, 0.35},    // z
  }};
  return table[static_cast<std::size_t>(c - 'a')];
}

// Articulation target held for a stretch of samples.
struct Target {
  std::size_t length;
  double f1, f2, f3;
  double g2, g3;       // relative formant gains
  double voice;        // voiced source into the formants
  double aspiration;   // noise into the formants
  double frication;    // noise through the fricative band
  double noise_hz;
};

struct Speaker {
  double f0;
  double formant_scale;
  double rate;
  double breath;
};

Speaker random_speaker(std::mt19937_64& rng) {
  return {uniform_real(rng, 85, 230), uniform_real(rng, 0.88, 1.15), uniform_real(rng, 0.85, 1.2),
          uniform_real(rng, 0.0, 0.05)};
}

void append_letter(std::vector<Target>& plan, char c, const Speaker& sp, int rate,
                   std::mt19937_64& rng) {
  const Phone& p = phone_for(c);
  const double s = sp.formant_scale;
  const double scale = 1.0 / sp.rate;
  auto len = [&](double ms) { return n_samples(ms * scale * uniform_real(rng, 0.9, 1.1) / 1000.0, rate); };
  Target t{0, p.f1 * s, p.f2 * s, p.f3 * s, 0.6, 0.3, 0, sp.breath, 0, p.noise_hz};
  switch (p.kind) {
    case PhoneKind::kVowel:
      t.length = len(130), t.voice = 1.0;
      plan.push_back(t);
      break;
    case PhoneKind::kApprox:
      t.length = len(80), t.voice = 0.6, t.g2 = 0.4, t.g3 = 0.2;
      plan.push_back(t);
      break;
    case PhoneKind::kNasal:
      t.length = len(80), t.voice = 0.45, t.g2 = 0.12, t.g3 = 0.06;
      plan.push_back(t);
      break;
    case PhoneKind::kFricative:
      t.length = len(100), t.voice = p.voiced ? 0.25 : 0.0, t.frication = p.noise_gain;
      plan.push_back(t);
      break;
    case PhoneKind::kAspirate:
      t.length = len(70), t.voice = 0.0, t.aspiration = p.noise_gain;
      plan.push_back(t);
      break;
    case PhoneKind::kStop: {
      Target closure = t;
      closure.length = len(55);
      closure.voice = p.voiced ? 0.12 : 0.0;
      closure.f1 = 150, closure.g2 = 0.0, closure.g3 = 0.0, closure.aspiration = 0;
      plan.push_back(closure);
      Target burst = t;
      burst.length = len(p.voiced ? 12 : 20);
      burst.voice = 0.0, burst.frication = 0.8;
      plan.push_back(burst);
      Target release = t;
      release.length = len(p.voiced ? 15 : 35);
      release.voice = p.voiced ? 0.3 : 0.0, release.aspiration = p.voiced ? 0.05 : 0.3;
      plan.push_back(release);
      break;
    }
  }
}

Target silence_target(std::size_t length) { return {length, 500, 1500, 2500, 0, 0, 0, 0, 0, 1000}; }

std::vector<Target> plan_words(const std::vector<std::string>& words, const Speaker& sp, int rate,
                               std::mt19937_64& rng) {
  std::vector<Target> plan;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (w > 0) plan.push_back(silence_target(n_samples(uniform_real(rng, 0.06, 0.16) / sp.rate, rate)));
    for (char c : words[w])
      if (c >= 'a' && c <= 'z') append_letter(plan, c, sp, rate, rng);
  }
  return plan;
}

std::size_t plan_length(const std::vector<Target>& plan) {
  std::size_t n = 0;
  for (const auto& t : plan) n += t.length;
  return n;
}

Signal render_plan(const std::vector<Target>& plan, const Speaker& sp, int rate,
                   std::mt19937_64& rng) {
  const std::size_t n = plan_length(plan);
  Signal out(n, 0.0);
  if (n == 0) return out;
  // Per-sample parameter tracks with linear transitions between targets.
  const std::size_t blend = n_samples(0.012, rate);
  std::vector<Target> track(n);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    for (std::size_t i = 0; i < plan[k].length; ++i) track[pos + i] = plan[k];
    if (k > 0 && blend > 0) {
      const Target& a = plan[k - 1];
      const Target& b = plan[k];
      const std::size_t span = std::min({blend, plan[k].length, plan[k - 1].length});
      for (std::size_t i = 0; i < span; ++i) {
        const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(span);
        auto lerp = [u](double x, double y) { return x + (y - x) * u; };
        Target& t = track[pos + i];
        t.f1 = lerp(a.f1, b.f1), t.f2 = lerp(a.f2, b.f2), t.f3 = lerp(a.f3, b.f3);
        t.g2 = lerp(a.g2, b.g2), t.g3 = lerp(a.g3, b.g3);
        t.voice = lerp(a.voice, b.voice), t.aspiration = lerp(a.aspiration, b.aspiration);
        t.frication = lerp(a.frication, b.frication);
      }
    }
    pos += plan[k].length;
  }

  const Signal noise = white(n, rng);
  const Signal fric_noise = white(n, rng);
  std::array<Biquad, 3> formant;
  Biquad fric;
  double phase = 0;
  const double vibrato_hz = uniform_real(rng, 4, 6);
  constexpr std::size_t kBlock = 32;
  for (std::size_t start = 0; start < n; start += kBlock) {
    const Target& t = track[std::min(start + kBlock / 2, n - 1)];
    formant[0].bandpass(rate, t.f1, 5.0);
    formant[1].bandpass(rate, t.f2, 8.0);
    formant[2].bandpass(rate, t.f3, 10.0);
    fric.bandpass(rate, t.noise_hz, 2.0);
    for (std::size_t i = start; i < std::min(start + kBlock, n); ++i) {
      const double time = static_cast<double>(i) / rate;
      const double progress = static_cast<double>(i) / static_cast<double>(n);
      const double f0 = sp.f0 * (1.08 - 0.16 * progress) *
                        (1.0 + 0.01 * std::sin(kTwoPi * vibrato_hz * time));
      phase += f0 / rate;
      phase -= std::floor(phase);
      // Band-limited-ish glottal pulse: sum of harmonics up to 4 kHz.
      double source = 0;
      const int harmonics = std::max(1, static_cast<int>(4000.0 / f0));
      for (int h = 1; h <= harmonics; ++h) source += std::sin(kTwoPi * h * phase) / h;
      const double excitation = track[i].voice * source + track[i].aspiration * noise[i] * 2.0;
      const double voiced = formant[0].step(excitation) + track[i].g2 * formant[1].step(excitation) +
                            track[i].g3 * formant[2].step(excitation);
      out[i] = voiced + track[i].frication * fric.step(fric_noise[i]);
    }
  }
  return out;
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "the",   "a",     "cat",   "dog",   "red",   "blue",  "one",   "two",   "three",
      "four",  "five",  "house", "tree",  "water", "sun",   "moon",  "big",   "small",
      "fast",  "slow",  "open",  "close", "door",  "car",   "light", "dark",  "hello",
      "world", "good",  "bad",   "time",  "day",   "night", "bird",  "fish",  "green",
      "happy", "music", "sound", "please"};
  return words;
}

SynthClip speech_clip(std::mt19937_64& rng, const SynthConfig& cfg) {
  const int rate = synth_rate(Domain::kSpeech);
  const double duration = uniform_real(rng, cfg.min_duration_s, cfg.max_duration_s);
  Speaker sp = random_speaker(rng);
  const std::size_t budget = n_samples(duration - 0.1, rate);
  std::vector<std::string> words;
  std::vector<Target> plan;
  for (int attempt = 0; attempt < 12; ++attempt) {
    const std::string& next =
        chance(rng, 0.35) ? pick(keyword_classes(), rng) : pick(filler_words(), rng);
    auto trial = words;
    trial.push_back(next);
    std::mt19937_64 plan_rng = rng;
    auto trial_plan = plan_words(trial, sp, rate, plan_rng);
    if (plan_length(trial_plan) > budget) {
      if (!words.empty()) break;
      // A single long word in a short clip: speak faster until it fits.
      while (plan_length(trial_plan) > budget && sp.rate < 4.0) {
        sp.rate *= 1.15;
        plan_rng = rng;
        trial_plan = plan_words(trial, sp, rate, plan_rng);
      }
    }
    words = std::move(trial);
    plan = std::move(trial_plan);
    rng = plan_rng;
    if (words.size() >= 6) break;
  }
  Signal voice = render_plan(plan, sp, rate, rng);
  Signal x(n_samples(duration, rate), 0.0);
  const std::size_t slack = x.size() > voice.size() ? x.size() - voice.size() : 0;
  mix_into(x, voice, static_cast<std::ptrdiff_t>(uniform_index(rng, slack + 1)), 1.0);
  add_noise_floor(x, rate, uniform_real(rng, 25, 40), rng);
  std::string caption;
  for (const auto& w : words) caption += (caption.empty() ? "" : " ") + w;
  return {finish(x, rate, uniform_real(rng, 0.2, 0.9)), caption, -1};
}

// ---------------------------------------------------------------------------
// Environmental textures.

struct Texture {
  Signal signal;
  std::string caption;
};

Texture rain(std::mt19937_64& rng, std::size_t n, int rate) {
  const double density = uniform_real(rng, 150, 600);
  Signal x(n, 0.0);
  const std::size_t drops = static_cast<std::size_t>(density * n / rate);
  for (std::size_t k = 0; k < drops; ++k) {
    Signal d = white(n_samples(uniform_real(rng, 0.002, 0.008), rate), rng);
    decay(d, rate, 0.0015);
    mix_into(x, d, static_cast<std::ptrdiff_t>(uniform_index(rng, n)), uniform_real(rng, 0.2, 1.0));
  }
  x = highpassed(std::move(x), rate, uniform_real(rng, 800, 2500));
  Signal hiss = highpassed(white(n, rng), rate, 3000);
  mix_into(x, hiss, 0, 0.05);
  const std::string intensity = density < 300 ? "light" : "heavy";
  static const std::vector<std::string> forms = {"%s rain falling on a roof",
                                                 "%s rain pattering on the ground",
                                                 "the sound of %s rain"};
  std::string c = pick(forms, rng);
  c.replace(c.find("%s"), 2, intensity);
  return {x, c};
}

Texture engine(std::mt19937_64& rng, std::size_t n, int rate) {
  const bool revving = chance(rng, 0.4);
  const double f_start = uniform_real(rng, 25, 55);
  const double f_end = revving ? f_start * uniform_real(rng, 1.8, 3.0) : f_start;
  Signal x(n, 0.0);
  double phase = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n);
    const double f = f_start + (f_end - f_start) * u;
    phase += f / rate;
    phase -= std::floor(phase);
    double s = 0;
    for (int h = 1; h <= 30; ++h) s += std::sin(kTwoPi * h * phase) / std::pow(h, 0.7);
    const double firing = 0.6 + 0.4 * std::sin(kTwoPi * phase * 0.5);
    x[i] = s * firing;
  }
  x = lowpassed(std::move(x), rate, 1200);
  mix_into(x, lowpassed(white(n, rng), rate, 300), 0, 0.3);
  static const std::vector<std::string> idle = {"an engine idling", "a car engine running at idle",
                                                "a motor rumbling steadily"};
  static const std::vector<std::string> rev = {"an engine revving up", "a motor accelerating",
                                               "a car engine speeding up"};
  return {x, pick(revving ? rev : idle, rng)};
}

Texture wind(std::mt19937_64& rng, std::size_t n, int rate) {
  const bool gusty = chance(rng, 0.5);
  const double mod_hz = uniform_real(rng, 0.15, 0.6);
  const double base = uniform_real(rng, 250, 500);
  const double phase0 = uniform_real(rng, 0, kTwoPi);
  const Signal src = white(n, rng);
  Signal x(n, 0.0);
  Biquad bp;
  for (std::size_t start = 0; start < n; start += 64) {
    const double t = static_cast<double>(start) / rate;
    const double m = 0.5 + 0.5 * std::sin(kTwoPi * mod_hz * t + phase0);
    bp.bandpass(rate, base + 900 * m, 1.2);
    const double amp = gusty ? 0.2 + m * m : 0.6 + 0.3 * m;
    for (std::size_t i = start; i < std::min(start + 64, n); ++i) x[i] = amp * bp.step(src[i]);
  }
  static const std::vector<std::string> gust = {"strong gusts of wind", "wind howling in gusts",
                                                "gusty wind blowing hard"};
  static const std::vector<std::string> calm = {"wind blowing steadily", "a gentle breeze",
                                                "soft wind blowing outside"};
  return {x, pick(gusty ? gust : calm, rng)};
}

Texture birds(std::mt19937_64& rng, std::size_t n, int rate) {
  Signal x(n, 0.0);
  const double per_second = uniform_real(rng, 2, 7);
  const std::size_t chirps = std::max<std::size_t>(1, static_cast<std::size_t>(per_second * n / rate));
  const double f_base = uniform_real(rng, 2500, 4500);
  const bool falling = chance(rng, 0.5);
  for (std::size_t k = 0; k < chirps; ++k) {
    const std::size_t len = n_samples(uniform_real(rng, 0.04, 0.15), rate);
    const double f_a = f_base * uniform_real(rng, 0.85, 1.15);
    const double f_b = f_a * (falling ? uniform_real(rng, 0.55, 0.8) : uniform_real(rng, 1.25, 1.7));
    Signal c(len);
    double phase = 0;
    for (std::size_t i = 0; i < len; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(len);
      phase += (f_a + (f_b - f_a) * u) / rate;
      c[i] = std::sin(kTwoPi * phase) * std::sin(std::numbers::pi * u);
    }
    mix_into(x, c, static_cast<std::ptrdiff_t>(uniform_index(rng, n)), uniform_real(rng, 0.4, 1.0));
  }
  static const std::vector<std::string> forms = {"birds chirping", "a bird singing",
                                                 "birds tweeting in the trees"};
  return {x, pick(forms, rng)};
}

Texture siren(std::mt19937_64& rng, std::size_t n, int rate) {
  const bool two_tone = chance(rng, 0.5);
  const double period = uniform_real(rng, 0.8, 2.5);
  const double lo = uniform_real(rng, 550, 750), hi = lo * uniform_real(rng, 1.35, 1.7);
  const double phase0 = uniform_real(rng, 0, 1);
  Signal x(n);
  double phase = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate / period + phase0;
    const double f = two_tone ? (std::fmod(t, 1.0) < 0.5 ? lo : hi)
                              : lo + (hi - lo) * (0.5 - 0.5 * std::cos(kTwoPi * t));
    phase += f / rate;
    phase -= std::floor(phase);
    x[i] = std::sin(kTwoPi * phase) + std::sin(3 * kTwoPi * phase) / 3 + std::sin(5 * kTwoPi * phase) / 5;
  }
  static const std::vector<std::string> wail = {"a siren wailing", "an emergency siren rising and falling",
                                                "an ambulance siren"};
  static const std::vector<std::string> hilo = {"a two tone siren", "a police siren alternating",
                                                "a siren switching between two notes"};
  return {x, pick(two_tone ? hilo : wail, rng)};
}

Signal knock_sound(std::mt19937_64& rng, int rate) {
  const std::size_t len = n_samples(0.12, rate);
  Signal body(len, 0.0);
  const double f = uniform_real(rng, 120, 350);
  for (std::size_t i = 0; i < len; ++i) body[i] = std::sin(kTwoPi * f * i / rate);
  decay(body, rate, 0.03);
  Signal click = bandpassed(white(n_samples(0.01, rate), rng), rate, uniform_real(rng, 1000, 2000), 1.5);
  decay(click, rate, 0.003);
  mix_into(body, click, 0, 1.5);
  return body;
}

Texture knocking(std::mt19937_64& rng, std::size_t n, int rate) {
  Signal x(n, 0.0);
  std::size_t pos = n_samples(uniform_real(rng, 0.0, 0.3), rate);
  const std::size_t group = 2 + uniform_index(rng, 3);
  const double gap = uniform_real(rng, 0.12, 0.2);
  while (pos < n) {
    for (std::size_t k = 0; k < group && pos < n; ++k) {
      mix_into(x, knock_sound(rng, rate), static_cast<std::ptrdiff_t>(pos), uniform_real(rng, 0.7, 1.0));
      pos += n_samples(gap * uniform_real(rng, 0.9, 1.1), rate);
    }
    pos += n_samples(uniform_real(rng, 0.5, 1.0), rate);
  }
  static const std::vector<std::string> forms = {"someone knocking on a door", "knocking on wood",
                                                 "a series of knocks on a door"};
  return {x, pick(forms, rng)};
}

Texture dripping(std::mt19937_64& rng, std::size_t n, int rate) {
  Signal x(n, 0.0);
  const double interval = uniform_real(rng, 0.25, 0.8);
  std::size_t pos = n_samples(uniform_real(rng, 0.0, interval), rate);
  while (pos < n) {
    const double f = uniform_real(rng, 800, 1600);
    const std::size_t len = n_samples(0.12, rate);
    Signal d(len);
    double phase = 0;
    for (std::size_t i = 0; i < len; ++i) {
      const double u = std::min(1.0, static_cast<double>(i) / (0.04 * rate));
      phase += f * (1.0 + 0.6 * u) / rate;
      d[i] = std::sin(kTwoPi * phase);
    }
    decay(d, rate, uniform_real(rng, 0.02, 0.05));
    mix_into(x, d, static_cast<std::ptrdiff_t>(pos), uniform_real(rng, 0.6, 1.0));
    pos += n_samples(interval * uniform_real(rng, 0.8, 1.2), rate);
  }
  static const std::vector<std::string> forms = {"water dripping", "drops of water falling into a sink",
                                                 "a slow steady drip of water"};
  return {x, pick(forms, rng)};
}

Texture buzzing(std::mt19937_64& rng, std::size_t n, int rate) {
  const double f0 = uniform_real(rng, 110, 240);
  const double vib = uniform_real(rng, 5, 9), depth = uniform_real(rng, 0.02, 0.05);
  const double wobble = uniform_real(rng, 0.5, 3.0);
  Signal x(n);
  double phase = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    phase += f0 * (1.0 + depth * std::sin(kTwoPi * vib * t)) / rate;
    phase -= std::floor(phase);
    x[i] = (2.0 * phase - 1.0) * (0.6 + 0.4 * std::sin(kTwoPi * wobble * t));
  }
  x = bandpassed(std::move(x), rate, uniform_real(rng, 600, 1500), 0.8);
  static const std::vector<std::string> forms = {"an insect buzzing", "a fly buzzing around",
                                                 "a bee buzzing nearby"};
  return {x, pick(forms, rng)};
}

SynthClip environment_clip(int label, std::mt19937_64& rng, double duration) {
  const int rate = synth_rate(Domain::kSound);
  const std::size_t n = n_samples(duration, rate);
  Texture t;
  switch (label) {
    case 0: t = rain(rng, n, rate); break;
    case 1: t = engine(rng, n, rate); break;
    case 2: t = wind(rng, n, rate); break;
    case 3: t = birds(rng, n, rate); break;
    case 4: t = siren(rng, n, rate); break;
    case 5: t = knocking(rng, n, rate); break;
    case 6: t = dripping(rng, n, rate); break;
    default: t = buzzing(rng, n, rate); break;
  }
  const bool distant = chance(rng, 0.3);
  if (distant) {
    t.signal = lowpassed(std::move(t.signal), rate, uniform_real(rng, 1500, 3000));
    t.caption += " in the distance";
  }
  fade_edges(t.signal, n_samples(0.01, rate));
  add_noise_floor(t.signal, rate, uniform_real(rng, 12, 35), rng);
  return {finish(t.signal, rate, uniform_real(rng, 0.1, 0.9)), t.caption, label};
}

// ---------------------------------------------------------------------------
// Music.

struct Instruments {
  int rate;
  std::mt19937_64& rng;

  Signal kick() const {
    const std::size_t len = n_samples(0.25, rate);
    Signal s(len);
    double phase = 0;
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / rate;
      phase += (45.0 + 80.0 * std::exp(-t / 0.03)) / rate;
      s[i] = std::sin(kTwoPi * phase);
    }
    decay(s, rate, 0.12);
    return s;
  }
  Signal snare() const {
    Signal n = bandpassed(white(n_samples(0.2, rate), rng), rate, 3000, 0.6);
    decay(n, rate, 0.05);
    Signal body(n.size());
    for (std::size_t i = 0; i < body.size(); ++i) body[i] = std::sin(kTwoPi * 185.0 * i / rate);
    decay(body, rate, 0.04);
    mix_into(n, body, 0, 0.6);
    return n;
  }
  Signal hat(bool open) const {
    Signal n = highpassed(white(n_samples(open ? 0.3 : 0.06, rate), rng), rate, 7000);
    decay(n, rate, open ? 0.1 : 0.015);
    return n;
  }
  Signal ride() const {
    const std::size_t len = n_samples(0.5, rate);
    Signal s = bandpassed(white(len, rng), rate, 5000, 1.0);
    for (double f : {3100.0, 4270.0, 5730.0})
      for (std::size_t i = 0; i < len; ++i) s[i] += 0.3 * std::sin(kTwoPi * f * i / rate);
    decay(s, rate, 0.25);
    return s;
  }
  Signal saw(double f, double seconds, double detune = 0.0) const {
    Signal s(n_samples(seconds, rate));
    double p1 = unit_double(rng), p2 = unit_double(rng);
    for (auto& v : s) {
      p1 += f * (1 + detune) / rate;
      p2 += f * (1 - detune) / rate;
      p1 -= std::floor(p1);
      p2 -= std::floor(p2);
      v = (2 * p1 - 1) + (detune > 0 ? 2 * p2 - 1 : 0.0);
    }
    return s;
  }
  Signal bass(double f, double seconds, double cutoff) const {
    Signal s = lowpassed(saw(f, seconds), rate, cutoff);
    decay(s, rate, seconds * 0.8);
    fade_edges(s, n_samples(0.005, rate));
    return s;
  }
  Signal pad(const std::vector<double>& freqs, double seconds) const {
    Signal s(n_samples(seconds, rate), 0.0);
    for (double f : freqs) mix_into(s, saw(f, seconds, 0.003), 0, 0.3);
    s = lowpassed(std::move(s), rate, 1200);
    const std::size_t attack = n_samples(std::min(0.6, seconds / 3), rate);
    fade_edges(s, attack);
    return s;
  }
  Signal piano(double f, double seconds) const {
    Signal s(n_samples(seconds, rate), 0.0);
    for (int h = 1; h <= 8; ++h) {
      const double fh = f * h * (1.0 + 0.0004 * h * h);
      if (fh > 0.45 * rate) break;
      const double tau = 0.8 / h;
      double env = 1.0;
      const double k = std::exp(-1.0 / (tau * rate));
      for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] += env * std::sin(kTwoPi * fh * i / rate) / std::pow(h, 1.2);
        env *= k;
      }
    }
    fade_edges(s, n_samples(0.004, rate));
    return s;
  }
  Signal pluck(double f, double seconds) const {
    const std::size_t period = std::max<std::size_t>(2, static_cast<std::size_t>(rate / f));
    Signal buf(period);
    for (auto& v : buf) v = unit_double(rng) * 2 - 1;
    Signal s(n_samples(seconds, rate));
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t j = i % period;
      s[i] = buf[j];
      buf[j] = 0.996 * 0.5 * (buf[j] + buf[(j + 1) % period]);
    }
    return s;
  }
  Signal power_chord(double f, double seconds) const {
    Signal s(n_samples(seconds, rate), 0.0);
    for (double m : {1.0, 1.5, 2.0}) mix_into(s, saw(f * m, seconds, 0.002), 0, 0.4);
    for (auto& v : s) v = std::tanh(3.0 * v);
    s = lowpassed(std::move(s), rate, 3000);
    fade_edges(s, n_samples(0.005, rate));
    return s;
  }
  Signal stab(const std::vector<double>& freqs, double seconds) const {
    Signal s(n_samples(seconds, rate), 0.0);
    for (double f : freqs) {
      double p = 0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        p += f / rate;
        p -= std::floor(p);
        s[i] += 0.3 * (p < 0.5 ? 1.0 : -1.0);
      }
    }
    s = highpassed(lowpassed(std::move(s), rate, 2500), rate, 300);
    decay(s, rate, seconds * 0.5);
    fade_edges(s, n_samples(0.003, rate));
    return s;
  }
};

// Scale-degree triads/sevenths over a root, in semitones.
std::vector<double> chord_notes(double root_midi, int degree, bool minor_key, bool seventh) {
  static const int major[] = {0, 2, 4, 5, 7, 9, 11};
  static const int minor[] = {0, 2, 3, 5, 7, 8, 10};
  const int* scale = minor_key ? minor : major;
  std::vector<double> out;
  const int tones = seventh ? 4 : 3;
  for (int k = 0; k < tones; ++k) {
    const int idx = degree + 2 * k;
    out.push_back(midi_hz(root_midi + scale[idx % 7] + 12 * (idx / 7)));
  }
  return out;
}

std::vector<int> progression(std::mt19937_64& rng, int style) {
  static const std::vector<std::vector<int>> pop = {{0, 4, 5, 3}, {0, 3, 4, 3}, {5, 3, 0, 4}};
  static const std::vector<std::vector<int>> jazz = {{1, 4, 0, 5}, {1, 4, 0, 0}, {0, 5, 1, 4}};
  static const std::vector<std::vector<int>> simple = {{0, 3}, {0, 4}, {0, 5, 3, 4}};
  switch (style) {
    case 1: return pick(jazz, rng);
    case 2: return pick(simple, rng);
    default: return pick(pop, rng);
  }
}

std::string tempo_word(double bpm) {
  if (bpm < 90) return "slow";
  if (bpm < 120) return "mid tempo";
  return "fast";
}

SynthClip genre_clip(int label, std::mt19937_64& rng, double duration) {
  const int rate = synth_rate(Domain::kMusic);
  const std::size_t n = n_samples(duration, rate);
  Signal x(n, 0.0);
  Instruments ins{rate, rng};
  const double root = 48 + static_cast<double>(uniform_index(rng, 12));
  const bool minor = chance(rng, 0.4);
  auto at = [rate](double seconds) { return static_cast<std::ptrdiff_t>(std::llround(seconds * rate)); };
  std::string caption;
  switch (label) {
    case 0: {  // ambient
      const auto prog = progression(rng, 2);
      const double chord_len = uniform_real(rng, 1.5, 3.0);
      for (std::size_t k = 0; k * chord_len < duration; ++k) {
        auto notes = chord_notes(root + 12, prog[k % prog.size()], minor, true);
        mix_into(x, ins.pad(notes, chord_len * 1.4), at(k * chord_len), 1.0);
      }
      if (chance(rng, 0.5))
        for (double t = uniform_real(rng, 0, 1); t < duration; t += uniform_real(rng, 0.8, 1.6))
          mix_into(x, ins.piano(midi_hz(root + 24 + 2 * uniform_index(rng, 5)), 1.5), at(t), 0.15);
      static const std::vector<std::string> forms = {
          "a slow ambient piece with soft synth pads", "calm ambient music with sustained chords",
          "a dreamy ambient soundscape with warm pads"};
      caption = pick(forms, rng);
      break;
    }
    case 1: {  // rock
      const double bpm = uniform_real(rng, 110, 150), beat = 60 / bpm;
      const auto prog = progression(rng, 0);
      for (std::size_t b = 0; b * beat < duration; ++b) {
        const double t = b * beat;
        if (b % 2 == 0) mix_into(x, ins.kick(), at(t), 0.9);
        else mix_into(x, ins.snare(), at(t), 0.7);
        for (int e = 0; e < 2; ++e) {
          mix_into(x, ins.hat(false), at(t + e * beat / 2), 0.2);
          const double f = chord_notes(root, prog[(b / 4) % prog.size()], minor, false)[0];
          mix_into(x, ins.power_chord(f, beat / 2), at(t + e * beat / 2), 0.35);
          mix_into(x, ins.bass(f / 2, beat / 2, 500), at(t + e * beat / 2), 0.4);
        }
      }
      caption = "a " + tempo_word(bpm) + " rock song with distorted electric guitars and drums";
      break;
    }
    case 2: {  // classical piano
      const double bpm = uniform_real(rng, 70, 110), beat = 60 / bpm;
      const auto prog = progression(rng, 0);
      const int per_beat = chance(rng, 0.5) ? 4 : 2;
      std::size_t step = 0;
      for (double t = 0; t < duration; t += beat / per_beat, ++step) {
        auto notes = chord_notes(root + 12, prog[(step / (4 * per_beat)) % prog.size()], minor, false);
        notes.push_back(notes[0] * 2);
        const std::size_t cycle = 2 * notes.size() - 2;
        const std::size_t idx = step % cycle < notes.size() ? step % cycle : cycle - step % cycle;
        mix_into(x, ins.piano(notes[idx], 1.2), at(t), 0.5);
        if (step % (4 * per_beat) == 0) mix_into(x, ins.piano(notes[0] / 2, 2.0), at(t), 0.4);
      }
      static const std::vector<std::string> forms = {
          "a classical piano piece with flowing arpeggios", "a gentle solo piano performance",
          "classical music played on the piano"};
      caption = pick(forms, rng);
      break;
    }
    case 3: {  // techno
      const double bpm = uniform_real(rng, 124, 136), beat = 60 / bpm;
      for (std::size_t b = 0; b * beat < duration; ++b) {
        const double t = b * beat;
        mix_into(x, ins.kick(), at(t), 1.0);
        mix_into(x, ins.hat(true), at(t + beat / 2), 0.25);
        for (int s = 0; s < 4; ++s) {
          mix_into(x, ins.hat(false), at(t + s * beat / 4), 0.1);
          const double f = midi_hz(root - 12 + (s == 3 ? 12 : 0));
          mix_into(x, ins.bass(f, beat / 4, 300 + 1500 * (0.5 + 0.5 * std::sin(t))), at(t + s * beat / 4), 0.35);
        }
      }
      static const std::vector<std::string> forms = {
          "a fast techno track with a pounding kick drum and a pulsing synth bass",
          "driving electronic techno with a steady four on the floor beat",
          "repetitive techno with kick drum and hi hats"};
      caption = pick(forms, rng);
      break;
    }
    case 4: {  // jazz
      const double bpm = uniform_real(rng, 100, 180), beat = 60 / bpm;
      const auto prog = progression(rng, 1);
      for (std::size_t b = 0; b * beat < duration; ++b) {
        const double t = b * beat;
        mix_into(x, ins.ride(), at(t), 0.25);
        if (b % 2 == 1) mix_into(x, ins.ride(), at(t + beat * 2 / 3), 0.18);
        const auto chord = chord_notes(root, prog[(b / 4) % prog.size()], minor, true);
        mix_into(x, ins.bass(chord[b % 4] / 2, beat, 700), at(t), 0.5);
        if (chance(rng, 0.4)) mix_into(x, ins.stab(chord, beat * 0.6), at(t + beat * 2 / 3), 0.25);
      }
      static const std::vector<std::string> forms = {
          "a swinging jazz trio with walking bass, ride cymbal and piano",
          "a jazz tune with a walking upright bass", "smooth swing jazz with piano chords"};
      caption = pick(forms, rng);
      break;
    }
    case 5: {  // folk
      const double bpm = uniform_real(rng, 80, 115), beat = 60 / bpm;
      const auto prog = progression(rng, 2);
      for (std::size_t b = 0; b * 2 * beat / 2 < duration; ++b) {
        const double t = b * beat / 2;
        if (b % 4 == 1 && chance(rng, 0.5)) continue;
        const auto chord = chord_notes(root, prog[(b / 8) % prog.size()], minor, false);
        const bool down = b % 2 == 0;
        for (std::size_t k = 0; k < chord.size(); ++k) {
          const std::size_t idx = down ? k : chord.size() - 1 - k;
          mix_into(x, ins.pluck(chord[idx], 1.0), at(t + 0.012 * k), down ? 0.5 : 0.3);
        }
      }
      static const std::vector<std::string> forms = {
          "a gentle folk song with strummed acoustic guitar", "acoustic folk music with guitar strumming",
          "a " + tempo_word(bpm) + " acoustic guitar folk tune"};
      caption = pick(forms, rng);
      break;
    }
    case 6: {  // reggae
      const double bpm = uniform_real(rng, 65, 90), beat = 60 / bpm;
      const auto prog = progression(rng, 2);
      for (std::size_t b = 0; b * beat < duration; ++b) {
        const double t = b * beat;
        const auto chord = chord_notes(root + 12, prog[(b / 4) % prog.size()], minor, false);
        mix_into(x, ins.stab(chord, beat * 0.25), at(t + beat / 2), 0.35);
        mix_into(x, ins.hat(false), at(t), 0.12);
        mix_into(x, ins.hat(false), at(t + beat / 2), 0.12);
        if (b % 4 == 2) {
          mix_into(x, ins.kick(), at(t), 0.9);
          mix_into(x, ins.snare(), at(t), 0.4);
        }
        if (b % 2 == 0) mix_into(x, ins.bass(chord[0] / 4, beat * 0.9, 350), at(t), 0.6);
      }
      static const std::vector<std::string> forms = {
          "a laid back reggae groove with offbeat guitar chords and deep bass",
          "a reggae song with a one drop rhythm", "relaxed reggae music with skanking chords"};
      caption = pick(forms, rng);
      break;
    }
    default: {  // hip hop
      const double bpm = uniform_real(rng, 80, 96), beat = 60 / bpm;
      const auto prog = progression(rng, 0);
      for (std::size_t b = 0; b * beat < duration; ++b) {
        const double t = b * beat;
        if (b % 4 == 0) mix_into(x, ins.kick(), at(t), 1.0);
        if (b % 4 == 2) mix_into(x, ins.kick(), at(t + beat / 2), 0.9);
        if (b % 2 == 1) mix_into(x, ins.snare(), at(t), 0.8);
        mix_into(x, ins.hat(false), at(t), 0.15);
        mix_into(x, ins.hat(false), at(t + beat * 0.6), 0.12);
        if (b % 4 == 0) {
          auto chord = chord_notes(root + 12, prog[(b / 4) % prog.size()], minor, true);
          Signal loop(n_samples(4 * beat, rate), 0.0);
          for (double f : chord) mix_into(loop, ins.piano(f, 4 * beat), 0, 0.3);
          mix_into(x, lowpassed(std::move(loop), rate, 1500), at(t), 0.6);
        }
      }
      static const std::vector<std::string> forms = {
          "a hip hop beat with a punchy kick and snare and a mellow sample",
          "a laid back boom bap hip hop instrumental", "a slow hip hop groove with dusty piano chords"};
      caption = pick(forms, rng);
      break;
    }
  }
  fade_edges(x, n_samples(0.01, rate));
  add_noise_floor(x, rate, uniform_real(rng, 25, 45), rng);
  return {finish(x, rate, uniform_real(rng, 0.2, 0.9)), caption, label};
}

std::string zero_padded(std::size_t i, int width) {
  std::ostringstream os;
  os << std::setw(width) << std::setfill('0') << i;
  return os.str();
}

void ensure_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw IOError("cannot create " + p.string() + ": " + ec.message());
}

// Runs `make(i)` for every index in parallel; the first failure in index order
// is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, Fn make) {
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < count; ++i) {
    try {
      make(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

void SynthConfig::validate() const {
  if (!(min_duration_s >= 1.0) || !(max_duration_s >= min_duration_s) || max_duration_s > 30.0)
    throw ConfigError("synthetic clip durations must satisfy 1 <= min <= max <= 30 s");
}

int synth_rate(Domain domain) {
  switch (domain) {
    case Domain::kSpeech: return 16000;
    case Domain::kSound: return 22050;
    case Domain::kMusic: return 44100;
  }
  return 16000;
}

const std::vector<std::string>& keyword_classes() {
  static const std::vector<std::string> k = {"yes", "no",   "up",  "down", "left",
                                             "right", "on", "off", "stop", "go"};
  return k;
}

const std::vector<std::string>& environment_classes() {
  static const std::vector<std::string> k = {"rain",  "engine",   "wind",     "birds",
                                             "siren", "knocking", "dripping", "buzzing"};
  return k;
}

const std::vector<std::string>& genre_classes() {
  static const std::vector<std::string> k = {"ambient", "rock",   "classical", "techno",
                                             "jazz",    "folk",   "reggae",    "hiphop"};
  return k;
}

SynthClip synth_clip(Domain domain, std::mt19937_64& rng, const SynthConfig& cfg) {
  cfg.validate();
  switch (domain) {
    case Domain::kSpeech: return speech_clip(rng, cfg);
    case Domain::kSound: {
      const int label = static_cast<int>(uniform_index(rng, environment_classes().size()));
      return environment_clip(label, rng, uniform_real(rng, cfg.min_duration_s, cfg.max_duration_s));
    }
    case Domain::kMusic: {
      const int label = static_cast<int>(uniform_index(rng, genre_classes().size()));
      return genre_clip(label, rng, uniform_real(rng, cfg.min_duration_s, cfg.max_duration_s));
    }
  }
  throw DataError("unknown domain");
}

SynthClip synth_keyword(int label, std::mt19937_64& rng) {
  if (label < 0 || static_cast<std::size_t>(label) >= keyword_classes().size())
    throw DataError("keyword label out of range");
  const int rate = synth_rate(Domain::kSpeech);
  Speaker sp = random_speaker(rng);
  const std::vector<std::string> words = {keyword_classes()[static_cast<std::size_t>(label)]};
  auto plan = plan_words(words, sp, rate, rng);
  const Signal voice = render_plan(plan, sp, rate, rng);
  Signal x(n_samples(1.0, rate), 0.0);
  const std::size_t slack = x.size() > voice.size() ? x.size() - voice.size() : 0;
  mix_into(x, voice, static_cast<std::ptrdiff_t>(uniform_index(rng, slack + 1)), 1.0);
  add_noise_floor(x, rate, uniform_real(rng, 15, 35), rng);
  return {finish(x, rate, uniform_real(rng, 0.2, 0.9)), words[0], label};
}

SynthClip synth_environment(int label, std::mt19937_64& rng, const SynthConfig& cfg) {
  cfg.validate();
  if (label < 0 || static_cast<std::size_t>(label) >= environment_classes().size())
    throw DataError("environment label out of range");
  return environment_clip(label, rng, uniform_real(rng, cfg.min_duration_s, cfg.max_duration_s));
}

SynthClip synth_genre(int label, std::mt19937_64& rng, const SynthConfig& cfg) {
  cfg.validate();
  if (label < 0 || static_cast<std::size_t>(label) >= genre_classes().size())
    throw DataError("genre label out of range");
  return genre_clip(label, rng, uniform_real(rng, cfg.min_duration_s, cfg.max_duration_s));
}

std::vector<CorpusRecord> synth_corpus(const std::filesystem::path& out_dir,
                                       const std::vector<Domain>& domains,
                                       std::size_t n_per_domain, const SynthConfig& cfg) {
  cfg.validate();
  if (domains.empty() || n_per_domain == 0) throw ConfigError("nothing to synthesize");
  for (Domain d : domains) ensure_dir(out_dir / "audio" / std::string(domain_name(d)));
  const std::size_t total = domains.size() * n_per_domain;
  std::vector<CorpusRecord> relative(total);
  parallel_for(total, [&](std::size_t i) {
    const Domain d = domains[i / n_per_domain];
    const std::size_t k = i % n_per_domain;
    std::mt19937_64 rng(mix_seed(mix_seed(cfg.seed, 100 + static_cast<std::uint64_t>(d)), k));
    const SynthClip clip = synth_clip(d, rng, cfg);
    const std::string name = std::string(domain_name(d));
    const std::string rel = "audio/" + name + "/" + name + "_" + zero_padded(k, 5) + ".wav";
    write_wav(out_dir / rel, clip.audio);
    relative[i] = {rel, clip.caption, d};
  });
  write_manifest(out_dir / "manifest.jsonl", relative);
  std::vector<CorpusRecord> resolved = relative;
  for (auto& r : resolved) r.audio_path = (out_dir / r.audio_path).string();
  return resolved;
}

BenchmarkKind parse_benchmark_kind(const std::string& name) {
  if (name == "keywords") return BenchmarkKind::kKeywords;
  if (name == "environment") return BenchmarkKind::kEnvironment;
  if (name == "genre") return BenchmarkKind::kGenre;
  throw ConfigError("unknown benchmark '" + name + "' (keywords, environment, genre)");
}

std::string benchmark_kind_name(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::kKeywords: return "keywords";
    case BenchmarkKind::kEnvironment: return "environment";
    case BenchmarkKind::kGenre: return "genre";
  }
  return "?";
}

Benchmark synth_benchmark(const std::filesystem::path& out_dir, BenchmarkKind kind,
                          std::size_t clips_per_class, const SynthConfig& cfg) {
  cfg.validate();
  if (clips_per_class < 5) throw ConfigError("need at least 5 clips per class");
  Benchmark b;
  b.spec.name = benchmark_kind_name(kind);
  switch (kind) {
    case BenchmarkKind::kKeywords:
      b.spec.class_names = keyword_classes();
      b.spec.rule = SplitRule::kFolds;
      b.spec.train_folds = {1};
      b.spec.test_fold = 2;
      break;
    case BenchmarkKind::kEnvironment:
      b.spec.class_names = environment_classes();
      b.spec.rule = SplitRule::kFolds;
      b.spec.train_folds = {1, 2, 3, 4};
      b.spec.test_fold = 5;
      break;
    case BenchmarkKind::kGenre:
      b.spec.class_names = genre_classes();
      b.spec.rule = SplitRule::kStratified;
      b.spec.test_frac = 0.2;
      b.spec.split_seed = mix_seed(cfg.seed, 7);
      break;
  }
  b.spec.n_classes = b.spec.class_names.size();
  ensure_dir(out_dir / "audio");
  const std::size_t total = b.spec.n_classes * clips_per_class;
  b.records.resize(total);
  parallel_for(total, [&](std::size_t i) {
    const int label = static_cast<int>(i / clips_per_class);
    const std::size_t k = i % clips_per_class;
    std::mt19937_64 rng(mix_seed(mix_seed(cfg.seed, 200 + static_cast<std::uint64_t>(kind)), i));
    SynthClip clip;
    int fold = 0;
    switch (kind) {
      case BenchmarkKind::kKeywords:
        clip = synth_keyword(label, rng);
        fold = k % 4 == 3 ? 2 : 1;
        break;
      case BenchmarkKind::kEnvironment:
        clip = synth_environment(label, rng, cfg);
        fold = static_cast<int>(k % 5) + 1;
        break;
      case BenchmarkKind::kGenre:
        clip = synth_genre(label, rng, cfg);
        break;
    }
    const std::string rel = "audio/" + b.spec.class_names[static_cast<std::size_t>(label)] + "_" +
                            zero_padded(k, 4) + ".wav";
    write_wav(out_dir / rel, clip.audio);
    b.records[i] = {rel, label, fold};
  });
  save_benchmark(out_dir, b);
  for (auto& r : b.records) r.audio_path = (out_dir / r.audio_path).string();
  return b;
}

}  // namespace audapt
