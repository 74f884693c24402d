// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "audapt/data.hpp"
#include "audapt/error.hpp"

using namespace audapt;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("audapt_data_" + name);
  std::filesystem::create_directories(p);
  return p;
}

std::vector<CorpusRecord> toy_manifest(std::size_t speech, std::size_t sound,
                                       std::size_t music) {
  std::vector<CorpusRecord> out;
  auto add = [&](std::size_t n, Domain d) {
    for (std::size_t i = 0; i < n; ++i)
      out.push_back({"/clips/" + std::string(domain_name(d)) + std::to_string(i) + ".wav",
                     "caption " + std::to_string(i), d});
  };
  add(speech, Domain::kSpeech);
  add(sound, Domain::kSound);
  add(music, Domain::kMusic);
  return out;
}

}  // namespace

TEST_CASE("tokenize small cases") {
  CHECK(tokenize("").ids == std::vector<int>{tok::kBos, tok::kEos});
  CHECK(tokenize("ab").ids == std::vector<int>{tok::kBos, 6 + 'a', 6 + 'b', tok::kEos});
  CHECK(tok::kVocabSize == 262);
  const std::string high("\xff\x00", 2);
  CHECK(tokenize(high).ids == std::vector<int>{tok::kBos, 261, 6, tok::kEos});
}

TEST_CASE("detokenize inverts tokenize for random byte strings") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(0, 300), byte(0, 255);
  for (int i = 0; i < 100; ++i) {
    std::string s(static_cast<std::size_t>(len(rng)), '\0');
    for (auto& c : s) c = static_cast<char>(byte(rng));
    const auto ids = tokenize(s).ids;
    REQUIRE(ids.size() == s.size() + 2);
    REQUIRE(detokenize(ids) == s);
  }
}

TEST_CASE("caption filter counts BOS and EOS against the limit") {
  const CorpusRecord fits{"a.wav", std::string(446, 'x'), Domain::kSound};
  const CorpusRecord over{"b.wav", std::string(447, 'x'), Domain::kSound};
  const CorpusRecord short_{"c.wav", std::string(445, 'x'), Domain::kSound};
  CHECK(tokenize(fits.text).size() == 448);
  CHECK(keep_caption(fits));
  CHECK(keep_caption(short_));
  CHECK_FALSE(keep_caption(over));

  const std::vector<CorpusRecord> all{short_, over, fits, over};
  const auto kept = filter_captions(all);
  CHECK(kept == std::vector<CorpusRecord>{short_, fits});
  CHECK(filter_captions(kept) == kept);
}

TEST_CASE("training sequence with and without a domain token") {
  const CorpusRecord r{"x.wav", "hi", Domain::kMusic};
  CHECK(training_sequence(r, false) == std::vector<int>{1, 6 + 'h', 6 + 'i', 2});
  CHECK(training_sequence(r, true) == std::vector<int>{1, tok::kMusic, 6 + 'h', 6 + 'i', 2});
}

TEST_CASE("mixture sampling") {
  const auto manifest = toy_manifest(50, 30, 20);
  SUBCASE("degenerate mix draws a single domain") {
    const auto batch = sample_batch(manifest, MixtureSpec::speech_sound_music(0, 1, 0), 500, 1);
    for (const auto& r : batch) REQUIRE(r.domain == Domain::kSound);
  }
  SUBCASE("domain fractions converge to the weights") {
    const auto spec = MixtureSpec::default_mix();
    MixtureSampler sampler(manifest, spec, 42);
    const std::size_t n = 100000;
    std::array<std::size_t, 3> counts{};
    std::vector<std::size_t> per_record(manifest.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = sampler.next_index();
      ++counts[static_cast<int>(manifest[idx].domain)];
      ++per_record[idx];
    }
    for (Domain d : kAllDomains) {
      const double w = spec.weight(d);
      const double sigma = std::sqrt(w * (1 - w) / n);
      CHECK(std::abs(double(counts[int(d)]) / n - w) < 4 * sigma);
    }
    // within a domain records are uniform: every speech clip near 80000/50
    for (std::size_t i = 0; i < 50; ++i) CHECK(std::abs(double(per_record[i]) - 1600.0) < 4 * 40);
  }
  SUBCASE("fixed seed gives a fixed batch") {
    const auto spec = MixtureSpec::speech_sound_music(0.5, 0.25, 0.25);
    CHECK(sample_batch(manifest, spec, 64, 7) == sample_batch(manifest, spec, 64, 7));
    CHECK_FALSE(sample_batch(manifest, spec, 64, 7) == sample_batch(manifest, spec, 64, 8));
  }
  SUBCASE("saved state resumes the same stream") {
    const auto spec = MixtureSpec::default_mix();
    MixtureSampler a(manifest, spec, 5);
    a.next_batch(17);
    const auto state = a.save_state();
    const auto expected = a.next_batch(33);
    MixtureSampler b(manifest, spec, 999);
    b.restore_state(state);
    CHECK(b.next_batch(33) == expected);
    CHECK_THROWS_AS(b.restore_state("garbage"), DataError);
  }
  SUBCASE("invalid specs raise MixtureError") {
    CHECK_THROWS_AS(MixtureSpec::speech_sound_music(0.5, 0.5, 0.5).validate(manifest),
                    MixtureError);
    CHECK_THROWS_AS(MixtureSpec::speech_sound_music(1.2, -0.2, 0).validate(manifest),
                    MixtureError);
    const auto speech_only = toy_manifest(10, 0, 0);
    CHECK_THROWS_AS(MixtureSampler(speech_only, MixtureSpec::default_mix(), 0), MixtureError);
    CHECK_NOTHROW(MixtureSampler(speech_only, MixtureSpec::speech_sound_music(1, 0, 0), 0));
  }
}

TEST_CASE("manifest parsing") {
  const auto dir = temp_dir("manifest");
  const auto path = dir / "m.jsonl";
  SUBCASE("three valid lines with a blank line") {
    std::ofstream(path) << R"({"audio_path": "a.wav", "text": "one", "domain": "speech"})" "\n"
                        << "\n"
                        << R"({"audio_path": "/abs/b.wav", "text": "two", "domain": "sound"})" "\n"
                        << R"({"audio_path": "c.wav", "text": "three", "domain": "music"})" "\n";
    const auto recs = load_manifest(path);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].audio_path == (dir / "a.wav").string());
    CHECK(recs[1].audio_path == "/abs/b.wav");
    CHECK(recs[2].domain == Domain::kMusic);
  }
  SUBCASE("unknown domain reports its line") {
    std::ofstream(path) << R"({"audio_path": "a.wav", "text": "one", "domain": "speech"})" "\n"
                        << R"({"audio_path": "b.wav", "text": "two", "domain": "voice"})" "\n";
    try {
      load_manifest(path);
      FAIL("expected ManifestError");
    } catch (const ManifestError& e) {
      CHECK(e.line() == 2);
      CHECK(e.exit_code() == 3);
    }
  }
  SUBCASE("extra, missing and empty fields are rejected") {
    for (const char* bad :
         {R"({"audio_path": "a.wav", "text": "t", "domain": "sound", "x": 1})",
          R"({"audio_path": "a.wav", "domain": "sound"})",
          R"({"audio_path": "a.wav", "text": "", "domain": "sound"})",
          R"({"audio_path": "a.wav", "text": 3, "domain": "sound"})", "not json"}) {
      CAPTURE(bad);
      std::ofstream(path) << bad << "\n";
      CHECK_THROWS_AS(load_manifest(path), ManifestError);
    }
  }
  SUBCASE("20000-line round trip") {
    std::vector<CorpusRecord> recs;
    std::mt19937_64 rng(8);
    for (std::size_t i = 0; i < 20000; ++i)
      recs.push_back({"/data/clip_" + std::to_string(i) + ".wav",
                      "caption \"" + std::to_string(rng()) + "\" \xc3\xa9\\",
                      kAllDomains[i % 3]});
    write_manifest(path, recs);
    CHECK(load_manifest(path) == recs);
  }
  SUBCASE("missing file is an I/O error") {
    CHECK_THROWS_AS(load_manifest(dir / "nope.jsonl"), IOError);
  }
  std::filesystem::remove_all(dir);
}
