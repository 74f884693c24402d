// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "audapt/data.hpp"
#include "audapt/error.hpp"
#include "audapt/rng.hpp"

namespace audapt {

using json = nlohmann::json;

std::vector<CorpusRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::vector<CorpusRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ManifestError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || j.size() != 3 || !j.contains("audio_path") ||
        !j.contains("text") || !j.contains("domain"))
      throw ManifestError(line_no, "expected exactly {audio_path, text, domain}");
    if (!j["audio_path"].is_string() || !j["text"].is_string() ||
        !j["domain"].is_string())
      throw ManifestError(line_no, "fields must be strings");
    CorpusRecord r;
    r.audio_path = j["audio_path"].get<std::string>();
    r.text = j["text"].get<std::string>();
    if (r.audio_path.empty()) throw ManifestError(line_no, "empty audio_path");
    if (r.text.empty()) throw ManifestError(line_no, "empty text");
    try {
      r.domain = parse_domain(j["domain"].get<std::string>());
    } catch (const DataError&) {
      throw ManifestError(line_no, "unknown domain '" +
                                       j["domain"].get<std::string>() + "'");
    }
    const std::filesystem::path p(r.audio_path);
    if (p.is_relative() && !base.empty()) r.audio_path = (base / p).string();
    records.push_back(std::move(r));
  }
  return records;
}

std::string manifest_line(const CorpusRecord& record) {
  // ordered_json keeps the documented field order stable on disk
  nlohmann::ordered_json j;
  j["audio_path"] = record.audio_path;
  j["text"] = record.text;
  j["domain"] = std::string(domain_name(record.domain));
  return j.dump();
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<CorpusRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IOError("cannot write manifest " + path.string());
  for (const auto& r : records) os << manifest_line(r) << '\n';
  if (!os) throw IOError("short write to " + path.string());
}

MixtureSpec MixtureSpec::speech_sound_music(double speech, double sound, double music) {
  MixtureSpec s;
  s.weights = {speech, sound, music};
  return s;
}

void MixtureSpec::validate(const std::vector<CorpusRecord>& manifest) const {
  double total = 0;
  for (const double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw MixtureError("weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw MixtureError("weights sum to " + std::to_string(total) + ", not 1");
  for (Domain d : kAllDomains) {
    if (weight(d) == 0) continue;
    bool present = false;
    for (const auto& r : manifest) present = present || r.domain == d;
    if (!present)
      throw MixtureError("domain '" + std::string(domain_name(d)) +
                         "' has weight " + std::to_string(weight(d)) +
                         " but no records");
  }
}

MixtureSampler::MixtureSampler(const std::vector<CorpusRecord>& manifest,
                               MixtureSpec spec, std::uint64_t seed)
    : spec_(spec), rng_(seed) {
  spec_.validate(manifest);
  for (std::size_t i = 0; i < manifest.size(); ++i)
    by_domain_[static_cast<int>(manifest[i].domain)].push_back(i);
}

std::size_t MixtureSampler::next_index() {
  const double u = unit_double(rng_);
  double cumulative = 0;
  std::size_t pick = 0;
  // Fall through to the last weighted domain so rounding never selects an
  // empty one.
  for (std::size_t d = 0; d < 3; ++d) {
    if (spec_.weights[d] == 0) continue;
    pick = d;
    cumulative += spec_.weights[d];
    if (u < cumulative) break;
  }
  const auto& pool = by_domain_[pick];
  return pool[uniform_index(rng_, pool.size())];
}

std::vector<std::size_t> MixtureSampler::next_batch(std::size_t batch_size) {
  std::vector<std::size_t> out(batch_size);
  for (auto& i : out) i = next_index();
  return out;
}

std::string MixtureSampler::save_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void MixtureSampler::restore_state(const std::string& state) {
  std::istringstream is(state);
  is >> rng_;
  if (!is) throw DataError("corrupt sampler state");
}

std::vector<CorpusRecord> sample_batch(const std::vector<CorpusRecord>& manifest,
                                       const MixtureSpec& spec,
                                       std::size_t batch_size, std::uint64_t seed) {
  MixtureSampler sampler(manifest, spec, seed);
  std::vector<CorpusRecord> out;
  out.reserve(batch_size);
  for (std::size_t i : sampler.next_batch(batch_size)) out.push_back(manifest[i]);
  return out;
}

}  // namespace audapt
