// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic audio for training and probing without external
// data. Speech is a formant synthesizer speaking a small word list, sound is a
// set of parametric environmental textures, music is a set of rhythmic and
// harmonic styles rendered from simple instruments. Every clip draws from its
// own seeded stream, so output does not depend on thread count.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "audapt/audio.hpp"
#include "audapt/data.hpp"
#include "audapt/probe.hpp"

namespace audapt {

struct SynthConfig {
  std::uint64_t seed = 0;
  double min_duration_s = 1.0;
  double max_duration_s = 3.0;

  void validate() const;
};

struct SynthClip {
  AudioClip audio;
  std::string caption;
  int label = -1;
};

// Native sample rate of each domain's generator; clips are resampled by the
// frontend like any recorded file.
int synth_rate(Domain domain);

const std::vector<std::string>& keyword_classes();
const std::vector<std::string>& environment_classes();
const std::vector<std::string>& genre_classes();

// Free-form training clip with a caption; duration in [min, max].
SynthClip synth_clip(Domain domain, std::mt19937_64& rng, const SynthConfig& cfg);

// Benchmark clip of a given class. Keywords are 1 s utterances; environment
// and genre clips follow the configured duration range.
SynthClip synth_keyword(int label, std::mt19937_64& rng);
SynthClip synth_environment(int label, std::mt19937_64& rng, const SynthConfig& cfg);
SynthClip synth_genre(int label, std::mt19937_64& rng, const SynthConfig& cfg);

// Writes <out_dir>/audio/<domain>/<domain>_NNNNN.wav and <out_dir>/manifest.jsonl
// with paths relative to out_dir. Returns records with resolved paths.
std::vector<CorpusRecord> synth_corpus(const std::filesystem::path& out_dir,
                                       const std::vector<Domain>& domains,
                                       std::size_t n_per_domain, const SynthConfig& cfg);

enum class BenchmarkKind { kKeywords, kEnvironment, kGenre };

BenchmarkKind parse_benchmark_kind(const std::string& name);
std::string benchmark_kind_name(BenchmarkKind kind);

// Writes a benchmark directory (audio/, manifest.jsonl, benchmark.json).
// Keywords use a provided split (fold 1 train, fold 2 test, 3:1); environment
// uses five folds (1-4 train, 5 test); genre uses a stratified 80/20 split.
Benchmark synth_benchmark(const std::filesystem::path& out_dir, BenchmarkKind kind,
                          std::size_t clips_per_class, const SynthConfig& cfg);

}  // namespace audapt
