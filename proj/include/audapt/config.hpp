// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration shared by every command: model, frontend, training, probe
// and synthesis settings plus input paths, read from a flat `key = value` file
// and overridable from the command line.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "audapt/audio.hpp"
#include "audapt/model.hpp"
#include "audapt/probe.hpp"
#include "audapt/synth.hpp"
#include "audapt/trainer.hpp"

namespace audapt {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct RunPaths {
  std::filesystem::path manifest;
  std::filesystem::path eval_manifest;
  std::vector<std::filesystem::path> benchmarks;
};

struct RunConfig {
  ModelConfig model;
  std::uint64_t model_seed = 0;
  FrontendConfig frontend;
  TrainConfig train;
  ProbeConfig probe;
  SynthConfig synth;
  RunPaths paths;

  // Sets one key. `seed` is shorthand for model.seed, train.seed, probe.seed
  // and synth.seed together. Throws ConfigError on an unknown key or a value
  // that does not parse.
  void set(const std::string& key, const std::string& value);
  void apply(const KeyValues& entries);

  // Checks every section and their agreement: the frontend's frame count must
  // be twice the encoder's, mel counts must match, and the vocabulary must be
  // the tokenizer's.
  void validate() const;

  // Every key with its resolved value, one `key = value` per line; feeding the
  // text back through parse_key_values and apply reproduces this config.
  std::string to_text() const;

  // Relative paths read from a config file are anchored here.
  void resolve_paths(const std::filesystem::path& base);

  static std::vector<std::string> keys();
};

// Blank lines and `#` comments are ignored. Throws ConfigError naming the
// source and line for a malformed line or a repeated key.
KeyValues parse_key_values(const std::string& text, const std::string& source = "config");
KeyValues read_config_file(const std::filesystem::path& path);

// Splits "key=value" command-line overrides.
std::pair<std::string, std::string> parse_override(const std::string& text);

}  // namespace audapt
