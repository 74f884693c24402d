// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "audapt/data.hpp"
#include "audapt/error.hpp"
#include "audapt/model.hpp"
#include "gradcheck.hpp"

using namespace audapt;
using audapt::testing::grad_check;
using Tf = Tensor<float>;
using Td = Tensor<double>;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.d_model = 32;
  c.n_heads = 4;
  c.n_enc_layers = 2;
  c.n_dec_layers = 2;
  c.max_encoder_frames = 150;
  return c;
}

template <typename T>
Tensor<T> random_mel(const ModelConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<T> v(c.n_mels * 2 * c.max_encoder_frames);
  for (auto& x : v) x = static_cast<T>(u(rng));
  return Tensor<T>::from({c.n_mels, 2 * c.max_encoder_frames}, std::move(v));
}

// Parameter count from the architecture description alone.
std::size_t expected_parameters(const ModelConfig& c) {
  const std::size_t d = c.d_model;
  const std::size_t ln = 2 * d;
  const std::size_t attn = 4 * d * d + 3 * d;  // key projection has no bias
  const std::size_t mlp = d * 4 * d + 4 * d + 4 * d * d + d;
  const std::size_t enc = (3 * c.n_mels * d + d) + (3 * d * d + d) +
                          c.n_enc_layers * (2 * ln + attn + mlp) + ln;
  const std::size_t dec = c.vocab_size * d + c.max_decoder_len * d +
                          c.n_dec_layers * (3 * ln + 2 * attn + mlp) + ln;
  return enc + dec;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("audapt_model_" + name);
}

template <typename T>
Linear<T> identity_linear(std::size_t d, bool bias) {
  std::vector<T> w(d * d, T(0));
  for (std::size_t i = 0; i < d; ++i) w[i * d + i] = T(1);
  Linear<T> l{Tensor<T>::from({d, d}, std::move(w)), {}};
  if (bias) l.bias = Tensor<T>::zeros({d});
  return l;
}

}  // namespace

TEST_CASE("encoder output shape") {
  SUBCASE("desk window: 300 mel frames -> 150 x d") {
    const auto cfg = small_config();
    const Seq2SeqModel<float> model(cfg, 1);
    const auto h = model.encode(random_mel<float>(cfg, 2));
    CHECK(h.shape() == Shape{150, 32});
  }
  SUBCASE("full window: 128 x 3000 -> 1500 x d") {
    EncoderConfig ec;
    ec.d_model = 16;
    ec.n_heads = 2;
    ec.n_layers = 1;
    const Encoder<float> enc(ec, 3);
    NoGradGuard guard;
    MelSpectrogram mel;
    mel.n_mels = 128;
    mel.n_frames = 3000;
    mel.values.assign(128 * 3000, 0.25f);
    CHECK(enc.encode(mel).shape() == Shape{1500, 16});
  }
  SUBCASE("wrong mel shape is rejected") {
    const auto cfg = small_config();
    const Seq2SeqModel<float> model(cfg, 1);
    CHECK_THROWS_AS(model.encode(Tf::zeros({128, 299})), ShapeError);
    CHECK_THROWS_AS(model.encode(Tf::zeros({80, 300})), ShapeError);
  }
}

TEST_CASE("encoder is deterministic for a fixed seed") {
  const auto cfg = small_config();
  const auto mel = random_mel<float>(cfg, 5);
  const auto a = Seq2SeqModel<float>(cfg, 9).encode(mel);
  const auto b = Seq2SeqModel<float>(cfg, 9).encode(mel);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  const auto c = Seq2SeqModel<float>(cfg, 10).encode(mel);
  CHECK_FALSE(std::equal(a.data().begin(), a.data().end(), c.data().begin()));
}

TEST_CASE("encoder initialization ignores decoder size") {
  auto a = small_config();
  auto b = a;
  b.n_dec_layers = 5;
  b.vocab_size = 300;
  const auto mel = random_mel<float>(a, 6);
  const auto ha = Seq2SeqModel<float>(a, 4).encode(mel);
  const auto hb = Seq2SeqModel<float>(b, 4).encode(mel);
  CHECK(std::equal(ha.data().begin(), ha.data().end(), hb.data().begin()));
}

TEST_CASE("single-head attention on two frames matches the hand result") {
  // Identity projections, zero biases: out_i = sum_j softmax_j(x_i.x_j/sqrt 2) x_j
  Attention<double> attn{identity_linear<double>(2, true), identity_linear<double>(2, false),
                         identity_linear<double>(2, true), identity_linear<double>(2, true),
                         1};
  const auto x = Td::from({2, 2}, {1, 0, 0, 1});
  const double a = 1.0 / std::sqrt(2.0);
  const double p = std::exp(a) / (std::exp(a) + 1.0);
  const auto y = attn(x, x, false);
  CHECK(y.data()[0] == doctest::Approx(p).epsilon(1e-14));
  CHECK(y.data()[1] == doctest::Approx(1 - p).epsilon(1e-14));
  CHECK(y.data()[2] == doctest::Approx(1 - p).epsilon(1e-14));
  CHECK(y.data()[3] == doctest::Approx(p).epsilon(1e-14));

  // Causal: frame 0 can only see itself.
  const auto yc = attn(x, x, true);
  CHECK(yc.data()[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(yc.data()[1] == doctest::Approx(0.0));
  CHECK(yc.data()[3] == doctest::Approx(p).epsilon(1e-14));
}

TEST_CASE("decoder is causal over teacher-forced positions") {
  auto cfg = small_config();
  cfg.max_encoder_frames = 10;
  const Seq2SeqModel<double> model(cfg, 2);
  const auto hidden = model.encode(random_mel<double>(cfg, 3));
  std::vector<int> tokens(20);
  for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = static_cast<int>(6 + 7 * i % 250);
  tokens[0] = tok::kBos;
  const auto base = model.decode_teacher_forced(hidden, tokens);
  const std::size_t v = cfg.vocab_size;
  for (std::size_t t : {1u, 7u, 19u}) {
    auto changed = tokens;
    changed[t] = changed[t] == 100 ? 101 : 100;
    const auto out = model.decode_teacher_forced(hidden, changed);
    for (std::size_t i = 0; i < t * v; ++i) REQUIRE(out.data()[i] == base.data()[i]);
    bool moved = false;
    for (std::size_t i = t * v; i < (t + 1) * v; ++i) moved = moved || out.data()[i] != base.data()[i];
    CHECK(moved);
  }
}

TEST_CASE("decoder length limits") {
  auto cfg = small_config();
  cfg.max_encoder_frames = 4;
  const Seq2SeqModel<float> model(cfg, 0);
  const auto hidden = model.encode(random_mel<float>(cfg, 1));
  SUBCASE("BOS alone yields one row of logits") {
    const std::vector<int> bos{tok::kBos};
    CHECK(model.decode_teacher_forced(hidden, bos).shape() == Shape{1, cfg.vocab_size});
  }
  SUBCASE("exactly max_decoder_len is accepted") {
    const std::vector<int> full(cfg.max_decoder_len, tok::kBos);
    CHECK(model.decode_teacher_forced(hidden, full).dim(0) == cfg.max_decoder_len);
  }
  SUBCASE("empty and overlong inputs are rejected") {
    CHECK_THROWS_AS(model.decode_teacher_forced(hidden, std::vector<int>{}), LengthError);
    const std::vector<int> over(cfg.max_decoder_len + 1, tok::kBos);
    CHECK_THROWS_AS(model.decode_teacher_forced(hidden, over), LengthError);
  }
}

TEST_CASE("avg_pool_2x") {
  const auto even = avg_pool_2x(Td::from({4, 1}, {1, 3, 5, 7}));
  CHECK(even.shape() == Shape{2, 1});
  CHECK(even.data()[0] == 2.0);
  CHECK(even.data()[1] == 6.0);
  const auto odd = avg_pool_2x(Td::from({3, 2}, {1, 2, 3, 4, 100, 100}));
  CHECK(odd.shape() == Shape{1, 2});
  CHECK(odd.data()[0] == 2.0);
  CHECK(odd.data()[1] == 3.0);
  CHECK_THROWS_AS(avg_pool_2x(Td::zeros({1, 2})), ShapeError);
}

TEST_CASE("parameter count matches the architecture") {
  const auto cfg = small_config();
  CHECK(Seq2SeqModel<float>(cfg, 0).parameter_count() == expected_parameters(cfg));
  ModelConfig other;
  other.d_model = 48;
  other.n_heads = 3;
  other.n_enc_layers = 1;
  other.n_dec_layers = 3;
  other.max_encoder_frames = 8;
  CHECK(Seq2SeqModel<float>(other, 0).parameter_count() == expected_parameters(other));
}

TEST_CASE("encoder checkpoint round trip") {
  const auto cfg = small_config();
  const Seq2SeqModel<float> model(cfg, 11);
  const auto mel = random_mel<float>(cfg, 12);
  const auto before = model.encode(mel);

  const auto ckpt = extract_encoder(model);
  CHECK(ckpt.parameter_count() == model.encoder().parameter_count());
  for (const auto& p : ckpt.parameters) CHECK(p.name.rfind("decoder", 0) == std::string::npos);

  const auto path = temp_path("enc.ckpt");
  save_encoder(path, ckpt);
  const auto loaded = load_encoder(path, cfg.encoder());
  const auto after = loaded.instantiate<float>().encode(mel);
  CHECK(std::equal(before.data().begin(), before.data().end(), after.data().begin()));

  SUBCASE("d_model mismatch is a checkpoint error") {
    auto wrong = cfg.encoder();
    wrong.d_model = 64;
    CHECK_THROWS_AS(load_encoder(path, wrong), CheckpointError);
  }
  SUBCASE("a flipped byte fails the hash") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    char c;
    f.seekg(100);
    f.get(c);
    f.seekp(100);
    f.put(static_cast<char>(c ^ 0x5a));
    f.close();
    CHECK_THROWS_AS(load_encoder(path), CheckpointError);
  }
  SUBCASE("a full-model file is not an encoder checkpoint") {
    const auto full = temp_path("full.ckpt");
    save_model(full, model);
    CHECK_THROWS_AS(load_encoder(full), CheckpointError);
    std::filesystem::remove(full);
  }
  std::filesystem::remove(path);
}

TEST_CASE("encoder output does not depend on decoder weights") {
  const auto cfg = small_config();
  Seq2SeqModel<float> model(cfg, 13);
  const auto mel = random_mel<float>(cfg, 14);
  const auto before = model.encode(mel);
  for (auto& p : model.decoder().named_parameters())
    for (auto& v : p.tensor.mutable_data()) v = 0.123f;
  const auto after = model.encode(mel);
  CHECK(std::equal(before.data().begin(), before.data().end(), after.data().begin()));
}

TEST_CASE("full model checkpoint round trip") {
  const auto cfg = small_config();
  const Seq2SeqModel<float> model(cfg, 15);
  const auto path = temp_path("model.ckpt");
  save_model(path, model);
  CHECK(read_model_config(path) == cfg);
  Seq2SeqModel<float> other(cfg, 99);
  load_model(path, other);
  const auto a = model.named_parameters(), b = other.named_parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(std::equal(a[i].tensor.data().begin(), a[i].tensor.data().end(),
                     b[i].tensor.data().begin()));
  auto bigger = cfg;
  bigger.n_dec_layers = 3;
  Seq2SeqModel<float> mismatch(bigger, 0);
  CHECK_THROWS_AS(load_model(path, mismatch), CheckpointError);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint archive rejects malformed input") {
  Archive a;
  a.kind = CheckpointKind::kOptimizerState;
  a.config = {{"step", 7}};
  a.arrays = {{"m", {2, 2}, {1, 2, 3, 4}}};
  const auto bytes = serialize_archive(a);
  const auto back = deserialize_archive(bytes);
  CHECK(back.kind == CheckpointKind::kOptimizerState);
  CHECK(back.config == a.config);
  CHECK(back.arrays[0].values == a.arrays[0].values);
  CHECK_THROWS_AS(deserialize_archive(std::span(bytes).first(bytes.size() - 1)),
                  CheckpointError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_archive(bad_magic), CheckpointError);
}

TEST_CASE("full model gradients match finite differences") {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.n_enc_layers = 2;
  cfg.n_dec_layers = 2;
  cfg.vocab_size = 20;
  cfg.max_decoder_len = 8;
  cfg.max_encoder_frames = 4;
  cfg.n_mels = 6;
  Seq2SeqModel<double> model(cfg, 17);
  // Larger init so attention and layer norms are away from their flat regions.
  std::mt19937_64 rng(18);
  std::normal_distribution<double> dist(0.0, 0.3);
  for (auto& p : model.named_parameters())
    for (auto& v : p.tensor.mutable_data()) v += dist(rng);
  const auto mel = random_mel<double>(cfg, 19);
  const std::vector<int> seq{1, 7, 12, 3, 19, 2};
  const std::vector<int> input(seq.begin(), seq.end() - 1);
  const std::vector<int> target(seq.begin() + 1, seq.end());

  std::vector<Td> leaves;
  for (auto& p : model.named_parameters()) leaves.push_back(p.tensor);
  const auto r = grad_check(
      leaves,
      [&] { return cross_entropy(model.decode_teacher_forced(model.encode(mel), input), target); },
      1e-5, 1e-6, 6, 23);
  CHECK(r.checked > 200);
  CHECK(r.max_rel_error < 1e-4);
}
