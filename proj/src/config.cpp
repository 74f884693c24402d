// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "audapt/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "audapt/data.hpp"
#include "audapt/error.hpp"

namespace audapt {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw ConfigError("key '" + key + "': cannot parse '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::string format(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

template <typename T>
Field number(const std::string& key, T& ref) {
  return {[&ref, key](const std::string& v) { ref = parse_number<T>(key, v); },
          [&ref] {
            if constexpr (std::is_floating_point_v<T>) return format(static_cast<double>(ref));
            else return std::to_string(ref);
          }};
}

Field boolean(const std::string& key, bool& ref) {
  return {[&ref, key](const std::string& v) { ref = parse_bool(key, v); },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

Field path(std::filesystem::path& ref) {
  return {[&ref](const std::string& v) { ref = v; }, [&ref] { return ref.string(); }};
}

Field path_list(std::vector<std::filesystem::path>& ref) {
  return {[&ref](const std::string& v) {
            ref.clear();
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ','))
              if (!trim(item).empty()) ref.emplace_back(trim(item));
          },
          [&ref] {
            std::string out;
            for (const auto& p : ref) out += (out.empty() ? "" : ",") + p.string();
            return out;
          }};
}

// Ordered so the echoed config reads top to bottom by section.
std::vector<std::pair<std::string, Field>> fields(RunConfig& c) {
  std::vector<std::pair<std::string, Field>> f;
  auto add = [&f](const std::string& k, Field fl) { f.emplace_back(k, std::move(fl)); };
  add("model.d_model", number("model.d_model", c.model.d_model));
  add("model.n_heads", number("model.n_heads", c.model.n_heads));
  add("model.n_enc_layers", number("model.n_enc_layers", c.model.n_enc_layers));
  add("model.n_dec_layers", number("model.n_dec_layers", c.model.n_dec_layers));
  add("model.vocab_size", number("model.vocab_size", c.model.vocab_size));
  add("model.max_decoder_len", number("model.max_decoder_len", c.model.max_decoder_len));
  add("model.max_encoder_frames", number("model.max_encoder_frames", c.model.max_encoder_frames));
  add("model.n_mels", number("model.n_mels", c.model.n_mels));
  add("model.seed", number("model.seed", c.model_seed));

  add("frontend.target_rate_hz", number("frontend.target_rate_hz", c.frontend.target_rate_hz));
  add("frontend.window_s", number("frontend.window_s", c.frontend.window_s));
  add("frontend.n_fft", number("frontend.n_fft", c.frontend.n_fft));
  add("frontend.hop", number("frontend.hop", c.frontend.hop));
  add("frontend.n_mels", number("frontend.n_mels", c.frontend.n_mels));
  add("frontend.log_floor", number("frontend.log_floor", c.frontend.log_floor));

  add("train.peak_lr", number("train.peak_lr", c.train.peak_lr));
  add("train.warmup_frac", number("train.warmup_frac", c.train.warmup_frac));
  add("train.beta1", number("train.beta1", c.train.adam.beta1));
  add("train.beta2", number("train.beta2", c.train.adam.beta2));
  add("train.eps", number("train.eps", c.train.adam.eps));
  add("train.weight_decay", number("train.weight_decay", c.train.adam.weight_decay));
  add("train.epochs", number("train.epochs", c.train.epochs));
  add("train.micro_batch", number("train.micro_batch", c.train.micro_batch));
  add("train.accum_steps", number("train.accum_steps", c.train.accum_steps));
  add("train.max_steps", number("train.max_steps", c.train.max_steps));
  add("train.checkpoint_every", number("train.checkpoint_every", c.train.checkpoint_every));
  add("train.seed", number("train.seed", c.train.seed));
  add("train.domain_prefix", boolean("train.domain_prefix", c.train.domain_prefix));
  add("train.mix_speech", number("train.mix_speech", c.train.mixture.weights[0]));
  add("train.mix_sound", number("train.mix_sound", c.train.mixture.weights[1]));
  add("train.mix_music", number("train.mix_music", c.train.mixture.weights[2]));

  add("probe.epochs", number("probe.epochs", c.probe.epochs));
  add("probe.lr", number("probe.lr", c.probe.lr));
  add("probe.batch_size", number("probe.batch_size", c.probe.batch_size));
  add("probe.beta1", number("probe.beta1", c.probe.beta1));
  add("probe.beta2", number("probe.beta2", c.probe.beta2));
  add("probe.eps", number("probe.eps", c.probe.eps));
  add("probe.seed", number("probe.seed", c.probe.seed));
  add("probe.pool_content_only", boolean("probe.pool_content_only", c.probe.pool_content_only));

  add("synth.seed", number("synth.seed", c.synth.seed));
  add("synth.min_duration_s", number("synth.min_duration_s", c.synth.min_duration_s));
  add("synth.max_duration_s", number("synth.max_duration_s", c.synth.max_duration_s));

  add("paths.manifest", path(c.paths.manifest));
  add("paths.eval_manifest", path(c.paths.eval_manifest));
  add("paths.benchmarks", path_list(c.paths.benchmarks));
  return f;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "seed") {
    const auto s = parse_number<std::uint64_t>(key, value);
    model_seed = train.seed = probe.seed = synth.seed = s;
    return;
  }
  for (auto& [k, f] : fields(*this))
    if (k == key) return f.set(value);
  throw ConfigError("unknown key '" + key + "'");
}

void RunConfig::apply(const KeyValues& entries) {
  for (const auto& [k, v] : entries) set(k, v);
}

void RunConfig::validate() const {
  model.validate();
  frontend.validate();
  train.validate();
  probe.validate();
  synth.validate();
  if (model.vocab_size != static_cast<std::size_t>(tok::kVocabSize))
    throw ConfigError("model.vocab_size must be " + std::to_string(tok::kVocabSize) +
                      " for the byte tokenizer");
  if (model.n_mels != frontend.n_mels)
    throw ConfigError("model.n_mels and frontend.n_mels differ");
  if (frontend.n_frames() != 2 * model.max_encoder_frames)
    throw ConfigError("frontend yields " + std::to_string(frontend.n_frames()) +
                      " frames but the encoder expects " +
                      std::to_string(2 * model.max_encoder_frames));
}

std::string RunConfig::to_text() const {
  RunConfig copy = *this;
  std::ostringstream os;
  for (auto& [k, f] : fields(copy)) os << k << " = " << f.get() << '\n';
  return os.str();
}

void RunConfig::resolve_paths(const std::filesystem::path& base) {
  auto fix = [&base](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  fix(paths.manifest);
  fix(paths.eval_manifest);
  for (auto& p : paths.benchmarks) fix(p);
}

std::vector<std::string> RunConfig::keys() {
  RunConfig c;
  std::vector<std::string> out;
  for (auto& [k, f] : fields(c)) out.push_back(k);
  return out;
}

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(n) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(n) + ": empty key");
    if (!seen.insert(key).second)
      throw ConfigError(source + ":" + std::to_string(n) + ": repeated key '" + key + "'");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || trim(text.substr(0, eq)).empty())
    throw ConfigError("override '" + text + "' is not key=value");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

}  // namespace audapt
