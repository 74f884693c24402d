// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "audapt/error.hpp"
#include "audapt/probe.hpp"

using namespace audapt;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("audapt_probe_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::vector<BenchmarkRecord> class_records(const std::vector<std::size_t>& sizes) {
  std::vector<BenchmarkRecord> out;
  for (std::size_t c = 0; c < sizes.size(); ++c)
    for (std::size_t i = 0; i < sizes[c]; ++i)
      out.push_back({"c" + std::to_string(c) + "_" + std::to_string(i), static_cast<int>(c), 0});
  // Interleave classes so positions carry no label information.
  std::mt19937_64 rng(99);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::size_t half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

void check_partition(const Split& s, const std::set<std::size_t>& expected_union) {
  std::set<std::size_t> train(s.train.begin(), s.train.end());
  std::set<std::size_t> test(s.test.begin(), s.test.end());
  CHECK(train.size() == s.train.size());
  CHECK(test.size() == s.test.size());
  for (auto i : test) CHECK(train.count(i) == 0);
  std::set<std::size_t> all = train;
  all.insert(test.begin(), test.end());
  CHECK(all == expected_union);
}

FeatureSet gaussian_pair(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  FeatureSet fs;
  fs.dim = 4;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    fs.labels.push_back(label);
    fs.values.push_back((label ? 3.0 : -3.0) + noise(rng));
    for (std::size_t j = 1; j < fs.dim; ++j) fs.values.push_back(noise(rng));
  }
  return fs;
}

ProbeConfig standard_protocol(std::uint64_t seed = 0) {
  ProbeConfig cfg;  // 50 epochs, Adam lr 1e-3, batch 64
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("fold split of a five-fold 2000-clip manifest") {
  std::vector<BenchmarkRecord> recs;
  for (int i = 0; i < 2000; ++i) recs.push_back({"x", i % 50, i % 5 + 1});
  const Split s = split_folds(recs, {1, 2, 3, 4}, 5);
  CHECK(s.train.size() == 1600);
  CHECK(s.test.size() == 400);
  std::set<std::size_t> all;
  for (std::size_t i = 0; i < recs.size(); ++i) all.insert(i);
  check_partition(s, all);
  for (auto i : s.test) CHECK(recs[i].fold == 5);
  CHECK_THROWS_AS(split_folds(recs, {1, 2, 5}, 5), SplitError);
  CHECK_THROWS_AS(split_folds(recs, {1, 2}, 6), SplitError);
}

TEST_CASE("fold split properties over random manifests") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 10 + rng() % 300;
    std::vector<BenchmarkRecord> recs;
    for (std::size_t i = 0; i < n; ++i)
      recs.push_back({"x", static_cast<int>(rng() % 4), static_cast<int>(1 + rng() % 6)});
    recs.push_back({"x", 0, 5});  // the test fold is never empty
    const std::vector<int> train_folds = {1, 2, 3, 4};
    const Split s = split_folds(recs, train_folds, 5);
    std::set<std::size_t> expected;
    for (std::size_t i = 0; i < recs.size(); ++i)
      if (recs[i].fold <= 5) expected.insert(i);
    check_partition(s, expected);
  }
}

TEST_CASE("stratified split of a ten-class 1000-clip manifest") {
  const auto recs = class_records(std::vector<std::size_t>(10, 100));
  const Split s = split_stratified(recs, 0.2, 7);
  CHECK(s.test.size() == 200);
  CHECK(s.train.size() == 800);
  std::map<int, int> per_class;
  for (auto i : s.test) ++per_class[recs[i].label];
  for (int c = 0; c < 10; ++c) CHECK(per_class[c] == 20);

  const Split again = split_stratified(recs, 0.2, 7);
  CHECK(again.test == s.test);
  CHECK(split_stratified(recs, 0.2, 8).test != s.test);
}

TEST_CASE("stratified rounding by hand") {
  const auto recs = class_records({7, 13});
  const Split s = split_stratified(recs, 0.2, 1);
  std::map<int, int> per_class;
  for (auto i : s.test) ++per_class[recs[i].label];
  CHECK(per_class[0] == 1);  // round(1.4)
  CHECK(per_class[1] == 3);  // round(2.6)
  CHECK_THROWS_AS(split_stratified(class_records({5, 1}), 0.2, 1), SplitError);
  CHECK_THROWS_AS(split_stratified(recs, 1.0, 1), SplitError);
}

TEST_CASE("stratified split properties over random manifests") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = 2 + rng() % 8;
    std::vector<std::size_t> sizes;
    for (std::size_t c = 0; c < classes; ++c) sizes.push_back(5 + rng() % 60);
    const auto recs = class_records(sizes);
    const Split s = split_stratified(recs, 0.2, rng());
    std::set<std::size_t> all;
    for (std::size_t i = 0; i < recs.size(); ++i) all.insert(i);
    check_partition(s, all);
    CHECK(s.test.size() == half_up(0.2 * static_cast<double>(recs.size())));
    // Every class but the largest (lowest label on ties) gets its own rounding.
    const std::size_t largest =
        static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    std::vector<std::size_t> per_class(classes, 0);
    for (auto i : s.test) ++per_class[static_cast<std::size_t>(recs[i].label)];
    for (std::size_t c = 0; c < classes; ++c)
      if (c != largest) CHECK(per_class[c] == half_up(0.2 * static_cast<double>(sizes[c])));
  }
}

TEST_CASE("separable Gaussians are learned under the standard protocol") {
  const FeatureSet train = gaussian_pair(200, 0.5, 1);
  const FeatureSet test = gaussian_pair(100, 0.5, 2);
  const ProbeResult r = train_probe(train, test, 2, standard_protocol());
  CHECK(r.accuracy >= 0.99);
  CHECK(r.n_train == 200);
  CHECK(r.n_test == 100);
  CHECK(!r.degenerate);
}

TEST_CASE("shuffled labels stay near chance") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  auto random_set = [&](std::size_t n) {
    FeatureSet fs;
    fs.dim = 16;
    for (std::size_t i = 0; i < n * fs.dim; ++i) fs.values.push_back(n01(rng));
    for (std::size_t i = 0; i < n; ++i) fs.labels.push_back(static_cast<int>(i % 5));
    std::shuffle(fs.labels.begin(), fs.labels.end(), rng);
    return fs;
  };
  const FeatureSet train = random_set(500);
  const FeatureSet test = random_set(500);
  const ProbeResult r = train_probe(train, test, 5, standard_protocol());
  MESSAGE("shuffled-label accuracy " << r.accuracy);
  CHECK(std::abs(r.accuracy - 0.2) <= 0.08);
}

TEST_CASE("probe is seed-deterministic and accuracy is consistent") {
  const FeatureSet train = gaussian_pair(150, 2.5, 3);
  const FeatureSet test = gaussian_pair(90, 2.5, 4);
  const ProbeResult a = train_probe(train, test, 3, standard_protocol(11));
  const ProbeResult b = train_probe(train, test, 3, standard_protocol(11));
  CHECK(a.weight == b.weight);
  CHECK(a.bias == b.bias);
  CHECK(a.accuracy == b.accuracy);
  const ProbeResult c = train_probe(train, test, 3, standard_protocol(12));
  CHECK(c.weight != a.weight);

  CHECK(a.accuracy >= 0.0);
  CHECK(a.accuracy <= 1.0);
  // Class 2 never occurs, so its accuracy is undefined.
  CHECK(std::isnan(a.per_class_accuracy[2]));
  double weighted = 0;
  std::size_t total = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    if (a.per_class_total[k] == 0) continue;
    weighted += a.per_class_accuracy[k] * static_cast<double>(a.per_class_total[k]);
    total += a.per_class_total[k];
  }
  CHECK(total == test.size());
  CHECK(weighted / static_cast<double>(total) == doctest::Approx(a.accuracy).epsilon(1e-12));
}

TEST_CASE("zero features fall back to the majority class") {
  FeatureSet train, test;
  train.dim = test.dim = 3;
  for (int i = 0; i < 40; ++i) {
    train.labels.push_back(i < 25 ? 2 : i % 2);
    train.values.insert(train.values.end(), 3, 0.0);
  }
  for (int i = 0; i < 20; ++i) {
    test.labels.push_back(i < 12 ? 2 : 0);
    test.values.insert(test.values.end(), 3, 0.0);
  }
  const ProbeResult r = train_probe(train, test, 3, standard_protocol());
  CHECK(r.accuracy == doctest::Approx(12.0 / 20.0));
  CHECK(predict(r, test.row(0), 3) == 2);
}

TEST_CASE("argmax ties go to the lowest class index") {
  ProbeResult p;
  p.weight = std::vector<double>(2 * 3, 0.0);
  p.bias = {0.5, 1.0, 1.0};
  const double x[2] = {0.0, 0.0};
  CHECK(predict(p, x, 2) == 1);
}

TEST_CASE("degenerate train split is reported, not fatal") {
  FeatureSet train = gaussian_pair(20, 0.5, 1);
  std::fill(train.labels.begin(), train.labels.end(), 1);
  const ProbeResult r = train_probe(train, gaussian_pair(10, 0.5, 2), 2, standard_protocol());
  CHECK(r.degenerate);
  CHECK(r.n_test == 10);
  CHECK(r.accuracy >= 0.0);
  CHECK(r.accuracy <= 1.0);
}

TEST_CASE("mean pooling") {
  const auto h = Tensor<float>::from({2, 2}, {1, 0, 0, 1});
  CHECK(mean_pool(h) == std::vector<double>{0.5, 0.5});

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-2, 2);
  std::vector<float> v(10 * 4);
  for (auto& x : v) x = u(rng);
  const auto hidden = Tensor<float>::from({10, 4}, v);
  const auto direct = mean_pool(hidden);
  const auto pooled = mean_pool(avg_pool_2x(hidden));
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(direct[j] - pooled[j]) < 1e-6);

  const auto first3 = mean_pool(hidden, 3);
  for (std::size_t j = 0; j < 4; ++j)
    CHECK(first3[j] == doctest::Approx((double(v[j]) + v[4 + j] + v[8 + j]) / 3.0));
  CHECK_THROWS_AS(mean_pool(Tensor<float>::from({4}, {1, 2, 3, 4})), ShapeError);
}

namespace {

struct TinySetup {
  FrontendConfig frontend;
  ModelConfig model;
  Benchmark bench;
};

// Two tone classes rendered to WAV, probed through a tiny frontend window.
TinySetup tiny_setup(const std::filesystem::path& dir) {
  TinySetup s;
  s.frontend.window_s = 0.1;  // 10 frames
  s.frontend.n_mels = 16;
  s.model.d_model = 8;
  s.model.n_heads = 2;
  s.model.n_enc_layers = 1;
  s.model.n_dec_layers = 1;
  s.model.max_decoder_len = 16;
  s.model.max_encoder_frames = 5;
  s.model.n_mels = 16;
  s.bench.spec.name = "tones";
  s.bench.spec.n_classes = 2;
  s.bench.spec.class_names = {"low", "high"};
  s.bench.spec.rule = SplitRule::kStratified;
  s.bench.spec.split_seed = 3;
  std::filesystem::create_directories(dir / "audio");
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  for (int i = 0; i < 30; ++i) {
    const int label = i % 2;
    const double f = (label ? 3000.0 : 300.0) * jitter(rng);
    AudioClip clip;
    clip.sample_rate_hz = 16000;
    for (int n = 0; n < 1600; ++n)
      clip.samples.push_back(static_cast<float>(0.5 * std::sin(2 * std::numbers::pi * f * n / 16000)));
    const std::string rel = "audio/t" + std::to_string(i) + ".wav";
    write_wav(dir / rel, clip);
    s.bench.records.push_back({rel, label, 0});
  }
  save_benchmark(dir, s.bench);
  s.bench = load_benchmark(dir);
  return s;
}

}  // namespace

TEST_CASE("benchmark directories round-trip") {
  const auto dir = temp_dir("roundtrip");
  const TinySetup s = tiny_setup(dir);
  CHECK(s.bench.records.size() == 30);
  CHECK(std::filesystem::path(s.bench.records[0].audio_path).is_absolute());
  CHECK(s.bench.spec.class_names == std::vector<std::string>{"low", "high"});
  CHECK_THROWS_AS(load_benchmark(dir / "missing"), IOError);
}

TEST_CASE("encoder comparison protocol") {
  const auto dir = temp_dir("compare");
  const TinySetup s = tiny_setup(dir);
  const EncoderCheckpoint a = extract_encoder(Seq2SeqModel<float>(s.model, 1));
  const EncoderCheckpoint b = extract_encoder(Seq2SeqModel<float>(s.model, 2));
  const ProbeConfig cfg = standard_protocol(5);

  SUBCASE("self comparison has zero delta everywhere") {
    const auto t = compare_encoders(a, "a", a, "a", {s.bench}, s.frontend, cfg);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].delta == 0.0);
    CHECK(t.rows[0].baseline.result.weight == t.rows[0].adapted.result.weight);
    const auto text = render_comparison_text(t);
    CHECK(text.find("0.00") != std::string::npos);
    CHECK(text.find("+0.00") == std::string::npos);
  }
  SUBCASE("each side matches a standalone probe of that encoder") {
    const auto t = compare_encoders(a, "a", b, "b", {s.bench}, s.frontend, cfg);
    const auto pa = probe_encoder(a, "a", {s.bench}, s.frontend, cfg);
    const auto pb = probe_encoder(b, "b", {s.bench}, s.frontend, cfg);
    CHECK(t.rows[0].baseline.result.weight == pa[0].result.weight);
    CHECK(t.rows[0].adapted.result.weight == pb[0].result.weight);
    CHECK(t.rows[0].delta ==
          doctest::Approx(100.0 * (pb[0].result.accuracy - pa[0].result.accuracy)));

    const auto parsed = parse_comparison_json(comparison_json(t, {s.bench}));
    CHECK(parsed.baseline_id == "a");
    CHECK(parsed.adapted_id == "b");
    REQUIRE(parsed.rows.size() == 1);
    CHECK(parsed.rows[0].delta == doctest::Approx(t.rows[0].delta));
    CHECK(render_comparison_csv(parsed) == render_comparison_csv(t));
  }
  SUBCASE("mismatched widths are refused") {
    ModelConfig wide = s.model;
    wide.d_model = 12;
    const EncoderCheckpoint w = extract_encoder(Seq2SeqModel<float>(wide, 1));
    CHECK_THROWS_AS(compare_encoders(a, "a", w, "w", {s.bench}, s.frontend, cfg), ComparisonError);
    FrontendConfig longer = s.frontend;
    longer.window_s = 0.2;
    CHECK_THROWS_AS(probe_encoder(a, "a", {s.bench}, longer, cfg), ConfigError);
  }
  SUBCASE("content-only pooling ignores padded frames") {
    const Encoder<float> enc = a.instantiate<float>();
    AudioClip half;
    half.sample_rate_hz = 16000;
    for (int n = 0; n < 800; ++n) half.samples.push_back(static_cast<float>(0.3 * std::sin(0.2 * n)));
    const MelSpectrogram mel = mel_from_clip(half, s.frontend);
    CHECK(mel.content_frames == 5);
    const auto all = embed(mel, enc, false);
    const auto content = embed(mel, enc, true);
    NoGradGuard guard;
    const auto hidden = enc.encode(mel);
    CHECK(content == mean_pool(hidden, 3));
    CHECK(all == mean_pool(hidden));
  }
}

TEST_CASE("comparison JSON rejects malformed documents") {
  CHECK_THROWS_AS(parse_comparison_json("{"), DataError);
  CHECK_THROWS_AS(parse_comparison_json(R"({"rows": 3})"), DataError);
}
