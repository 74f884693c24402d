// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training corpus handling: JSONL manifests, the byte-level caption
// tokenizer, the decoder-length caption filter and weighted domain sampling.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace audapt {

enum class Domain { kSpeech = 0, kSound = 1, kMusic = 2 };
inline constexpr std::array<Domain, 3> kAllDomains = {Domain::kSpeech, Domain::kSound,
                                                      Domain::kMusic};

std::string_view domain_name(Domain d);
// Throws DataError for anything other than "speech", "sound" or "music".
Domain parse_domain(std::string_view name);

struct CorpusRecord {
  std::string audio_path;
  std::string text;
  Domain domain = Domain::kSpeech;

  bool operator==(const CorpusRecord&) const = default;
};

// Token ids: specials first, then one id per byte value.
namespace tok {
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kSpeech = 3;
inline constexpr int kSound = 4;
inline constexpr int kMusic = 5;
inline constexpr int kSpecialCount = 6;
inline constexpr int kVocabSize = kSpecialCount + 256;
inline constexpr std::size_t kMaxDecoderLen = 448;

inline constexpr int byte_id(unsigned char b) { return kSpecialCount + b; }
inline constexpr int domain_id(Domain d) { return kSpeech + static_cast<int>(d); }
}  // namespace tok

struct TokenSequence {
  std::vector<int> ids;  // BOS ... EOS
  std::size_t size() const { return ids.size(); }
};

TokenSequence tokenize(std::string_view text);
// Inverse of tokenize; special tokens are skipped.
std::string detokenize(std::span<const int> ids);

// Keep iff the tokenized caption (BOS and EOS included) fits the limit.
bool keep_caption(const CorpusRecord& record,
                  std::size_t limit = tok::kMaxDecoderLen);
std::vector<CorpusRecord> filter_captions(const std::vector<CorpusRecord>& records,
                                          std::size_t limit = tok::kMaxDecoderLen);

// Decoder training sequence: BOS, optional domain token, caption bytes, EOS.
// Teacher forcing feeds ids[0..n-2] and predicts ids[1..n-1].
std::vector<int> training_sequence(const CorpusRecord& record, bool domain_prefix);

// One record per non-blank line, fields exactly {audio_path, text, domain}.
// Relative audio paths are resolved against the manifest's directory.
std::vector<CorpusRecord> load_manifest(const std::filesystem::path& path);
// Writes records verbatim (paths are not rewritten).
void write_manifest(const std::filesystem::path& path,
                    const std::vector<CorpusRecord>& records);
// Serialized manifest line, used by write_manifest.
std::string manifest_line(const CorpusRecord& record);

struct MixtureSpec {
  std::array<double, 3> weights{};  // indexed by Domain

  static MixtureSpec speech_sound_music(double speech, double sound, double music);
  // 80/10/10 speech/sound/music.
  static MixtureSpec default_mix() { return speech_sound_music(0.8, 0.1, 0.1); }

  double weight(Domain d) const { return weights[static_cast<int>(d)]; }
  // Throws MixtureError: negative weight, sum off by more than 1e-9, or a
  // weighted domain with no record in the manifest.
  void validate(const std::vector<CorpusRecord>& manifest) const;
};

// Draws records slot by slot: a domain by weight, then a uniform record
// within that domain. The generator state can be saved and restored.
class MixtureSampler {
 public:
  MixtureSampler(const std::vector<CorpusRecord>& manifest, MixtureSpec spec,
                 std::uint64_t seed);

  std::size_t next_index();
  std::vector<std::size_t> next_batch(std::size_t batch_size);

  std::string save_state() const;
  void restore_state(const std::string& state);

 private:
  MixtureSpec spec_;
  std::array<std::vector<std::size_t>, 3> by_domain_;
  std::mt19937_64 rng_;
};

std::vector<CorpusRecord> sample_batch(const std::vector<CorpusRecord>& manifest,
                                       const MixtureSpec& spec,
                                       std::size_t batch_size, std::uint64_t seed);

}  // namespace audapt
