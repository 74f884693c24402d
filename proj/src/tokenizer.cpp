// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "audapt/data.hpp"
#include "audapt/error.hpp"

namespace audapt {

std::string_view domain_name(Domain d) {
  switch (d) {
    case Domain::kSpeech: return "speech";
    case Domain::kSound: return "sound";
    case Domain::kMusic: return "music";
  }
  return "?";
}

Domain parse_domain(std::string_view name) {
  for (Domain d : kAllDomains)
    if (domain_name(d) == name) return d;
  throw DataError("unknown domain '" + std::string(name) + "'");
}

TokenSequence tokenize(std::string_view text) {
  TokenSequence seq;
  seq.ids.reserve(text.size() + 2);
  seq.ids.push_back(tok::kBos);
  for (const char c : text) seq.ids.push_back(tok::byte_id(static_cast<unsigned char>(c)));
  seq.ids.push_back(tok::kEos);
  return seq;
}

std::string detokenize(std::span<const int> ids) {
  std::string out;
  for (const int id : ids)
    if (id >= tok::kSpecialCount && id < tok::kVocabSize)
      out.push_back(static_cast<char>(id - tok::kSpecialCount));
  return out;
}

bool keep_caption(const CorpusRecord& record, std::size_t limit) {
  // BOS + bytes + EOS, without materializing the sequence
  return record.text.size() + 2 <= limit;
}

std::vector<CorpusRecord> filter_captions(const std::vector<CorpusRecord>& records,
                                          std::size_t limit) {
  std::vector<CorpusRecord> kept;
  for (const auto& r : records)
    if (keep_caption(r, limit)) kept.push_back(r);
  return kept;
}

std::vector<int> training_sequence(const CorpusRecord& record, bool domain_prefix) {
  std::vector<int> ids = tokenize(record.text).ids;
  if (domain_prefix) ids.insert(ids.begin() + 1, tok::domain_id(record.domain));
  return ids;
}

}  // namespace audapt
