// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "audapt/error.hpp"
#include "audapt/optim.hpp"
#include "audapt/trainer.hpp"

using namespace audapt;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("audapt_train_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

ModelConfig toy_model() {
  ModelConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.n_enc_layers = 1;
  c.n_dec_layers = 1;
  c.max_decoder_len = 64;
  c.max_encoder_frames = 8;
  c.n_mels = 8;
  return c;
}

std::vector<TrainExample> toy_examples(const ModelConfig& mc, std::size_t per_domain,
                                       std::uint64_t seed) {
  static const char* words[] = {"rain", "wind", "drum", "talk", "bird", "bass"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<TrainExample> out;
  for (Domain d : kAllDomains) {
    for (std::size_t i = 0; i < per_domain; ++i) {
      TrainExample ex;
      ex.record = {"clip" + std::to_string(out.size()),
                   std::string(words[(out.size() * 7) % 6]) + " " + words[i % 6], d};
      ex.mel.resize(mc.n_mels * 2 * mc.max_encoder_frames);
      for (auto& v : ex.mel) v = u(rng);
      ex.tokens = training_sequence(ex.record, true);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

TrainConfig toy_train(std::size_t micro, std::size_t accum, std::size_t steps) {
  TrainConfig t;
  t.peak_lr = 3e-3;
  t.micro_batch = micro;
  t.accum_steps = accum;
  t.max_steps = steps;
  t.seed = 17;
  return t;
}

std::vector<float> flat_params(const Seq2SeqModel<float>& m) {
  std::vector<float> out;
  for (const auto& p : m.named_parameters())
    out.insert(out.end(), p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

std::vector<std::string> log_without_wall(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto w = line.find(",\"wall_ms\"");
    out.push_back(w == std::string::npos ? line : line.substr(0, w));
  }
  return out;
}

// Independent schedule oracle.
double oracle_lr(std::size_t step, std::size_t total, double peak, double frac) {
  const double warm = std::ceil(frac * static_cast<double>(total));
  const double s = static_cast<double>(step);
  if (s < warm) return peak * s / warm;
  const double p = (s - warm) / (static_cast<double>(total) - warm);
  return peak * (1.0 + std::cos(std::numbers::pi * p)) / 2.0;
}

}  // namespace

TEST_CASE("warmup and cosine schedule") {
  TrainConfig cfg;  // peak 1e-5, warmup 5%
  const std::size_t total = 2000;
  const std::size_t warm = warmup_steps(total, cfg.warmup_frac);
  CHECK(warm == 100);
  CHECK(lr_at(warm, total, cfg) == 1e-5);
  CHECK(lr_at(total, total, cfg) < 1e-12);
  CHECK(lr_at(0, total, cfg) == 0.0);
  for (std::size_t s : {1u, 37u, 99u, 101u, 500u, 1000u, 1999u})
    CHECK(lr_at(s, total, cfg) == doctest::Approx(oracle_lr(s, total, 1e-5, 0.05)).epsilon(1e-12));
  double prev = -1;
  for (std::size_t s = 0; s <= warm; ++s) {
    CHECK(lr_at(s, total, cfg) > prev);
    prev = lr_at(s, total, cfg);
  }
  for (std::size_t s = warm + 1; s <= total; ++s) {
    CHECK(lr_at(s, total, cfg) <= prev);
    prev = lr_at(s, total, cfg);
  }
  CHECK(warmup_steps(7, 0.05) == 1);
  CHECK(lr_at(1, 7, cfg) == 1e-5);
  CHECK_THROWS_AS(lr_at(0, 0, cfg), ConfigError);
  CHECK_THROWS_AS(lr_at(11, 10, cfg), ConfigError);
}

TEST_CASE("AdamW scalar step matches closed-form arithmetic") {
  AdamConfig cfg;
  cfg.weight_decay = 0.01;
  const double lr = 1e-3;
  auto p = Tensor<double>::from({1}, {0.5}, true);
  std::vector<Tensor<double>> params = {p};
  AdamState<double> st;
  st.init(params);

  double ref = 0.5, m = 0, v = 0;
  const double grads[] = {0.2, -0.7, 0.05};
  for (int k = 1; k <= 3; ++k) {
    const double g = grads[k - 1];
    params[0].mutable_grad()[0] = g;
    adamw_step(params, st, lr, cfg);
    params[0].zero_grad();
    ref *= 1.0 - lr * cfg.weight_decay;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, k));
    const double vhat = v / (1.0 - std::pow(0.999, k));
    ref -= lr * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(std::abs(params[0].data()[0] - ref) < 1e-12);
  }
  CHECK(st.t == 3);
}

TEST_CASE("AdamW edge cases") {
  SUBCASE("no gradient and no decay leaves the parameter alone") {
    AdamConfig cfg;
    cfg.weight_decay = 0;
    std::vector<Tensor<double>> params = {Tensor<double>::from({2}, {1.5, -2.0}, true)};
    AdamState<double> st;
    st.init(params);
    adamw_step(params, st, 0.1, cfg);
    CHECK(params[0].data()[0] == 1.5);
    CHECK(params[0].data()[1] == -2.0);
  }
  SUBCASE("zero gradient applies decay only") {
    AdamConfig cfg;
    cfg.weight_decay = 0.1;
    std::vector<Tensor<double>> params = {Tensor<double>::from({1}, {2.0}, true)};
    AdamState<double> st;
    st.init(params);
    adamw_step(params, st, 0.01, cfg);
    CHECK(params[0].data()[0] == doctest::Approx(2.0 * 0.999).epsilon(1e-15));
  }
  SUBCASE("non-finite gradient aborts before any mutation") {
    AdamConfig cfg;
    std::vector<Tensor<double>> params = {Tensor<double>::from({2}, {1.0, 1.0}, true)};
    AdamState<double> st;
    st.init(params);
    params[0].mutable_grad()[0] = 0.1;
    params[0].mutable_grad()[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adamw_step(params, st, 0.01, cfg), NumericalError);
    CHECK(st.t == 0);
    CHECK(params[0].data()[0] == 1.0);
    CHECK(st.m[0][0] == 0.0);
  }
}

TEST_CASE("gradient accumulation is independent of the micro-batch split") {
  const ModelConfig mc = toy_model();
  const auto examples = toy_examples(mc, 4, 3);
  Seq2SeqModel<float> a(mc, 5), b(mc, 5), c(mc, 5);
  Trainer ta(a, examples, toy_train(4, 1, 10));
  Trainer tb(b, examples, toy_train(2, 2, 10));
  Trainer tc(c, examples, toy_train(1, 4, 10));
  for (int s = 0; s < 3; ++s) {
    const auto ra = ta.train_step();
    const auto rb = tb.train_step();
    const auto rc = tc.train_step();
    CHECK(std::abs(ra.train_loss - rb.train_loss) < 1e-6);
    CHECK(std::abs(ra.train_loss - rc.train_loss) < 1e-6);
  }
  const auto pa = flat_params(a), pb = flat_params(b), pc = flat_params(c);
  double diff = 0;
  for (std::size_t i = 0; i < pa.size(); ++i)
    diff = std::max({diff, double(std::abs(pa[i] - pb[i])), double(std::abs(pa[i] - pc[i]))});
  CHECK(diff < 1e-6);
}

TEST_CASE("per-example backward sums to the gradient of the batch-mean loss") {
  const ModelConfig mc = toy_model();
  const auto examples = toy_examples(mc, 2, 9);
  Seq2SeqModel<double> model(mc, 2);
  std::vector<Tensor<double>> params;
  for (auto& p : model.named_parameters()) params.push_back(p.tensor);
  const double w = 1.0 / static_cast<double>(examples.size());

  for (auto& p : params) p.zero_grad();
  for (const auto& ex : examples) backward(scale(example_loss(model, ex), w));
  std::vector<std::vector<double>> accumulated;
  for (auto& p : params)
    accumulated.emplace_back(p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end())
                                          : std::vector<double>(p.numel(), 0.0));

  for (auto& p : params) p.zero_grad();
  Tensor<double> total = example_loss(model, examples[0]);
  for (std::size_t i = 1; i < examples.size(); ++i) total = add(total, example_loss(model, examples[i]));
  backward(scale(total, w));
  double worst = 0;
  for (std::size_t k = 0; k < params.size(); ++k)
    for (std::size_t i = 0; i < params[k].numel(); ++i) {
      const double g = params[k].has_grad() ? params[k].grad()[i] : 0.0;
      worst = std::max(worst, std::abs(g - accumulated[k][i]));
    }
  CHECK(worst < 1e-6);
}

TEST_CASE("initial loss is near uniform over the vocabulary") {
  const ModelConfig mc = toy_model();
  Seq2SeqModel<float> model(mc, 11);
  const double loss = evaluate(model, toy_examples(mc, 4, 1));
  const double uniform = std::log(static_cast<double>(tok::kVocabSize));
  CHECK(std::abs(loss - uniform) < 0.1 * uniform);
}

TEST_CASE("short toy run at least halves the training loss") {
  const ModelConfig mc = toy_model();
  Seq2SeqModel<float> model(mc, 4);
  Trainer t(model, toy_examples(mc, 3, 2), toy_train(4, 1, 200));
  double first = 0, last = 0;
  for (std::size_t s = 0; s < 200; ++s) {
    const double l = t.train_step().train_loss;
    if (s < 10) first += l / 10;
    if (s >= 190) last += l / 10;
  }
  MESSAGE("mean loss first 10 steps " << first << ", last 10 steps " << last);
  CHECK(last < 0.5 * first);
  CHECK_THROWS_AS(t.train_step(), ConfigError);
}

TEST_CASE("evaluation records no graph and leaves the model unchanged") {
  const ModelConfig mc = toy_model();
  Seq2SeqModel<float> model(mc, 6);
  const auto ex = toy_examples(mc, 2, 4);
  const auto before = flat_params(model);
  const double a = evaluate(model, ex);
  const double b = evaluate(model, ex);
  CHECK(a == b);
  CHECK(flat_params(model) == before);
  for (const auto& p : model.named_parameters()) CHECK(!p.tensor.has_grad());
  CHECK_THROWS_AS(evaluate(model, {}), DataError);
}

TEST_CASE("trainer input validation") {
  const ModelConfig mc = toy_model();
  Seq2SeqModel<float> model(mc, 1);
  CHECK_THROWS_AS(Trainer(model, {}, toy_train(2, 1, 5)), DataError);
  auto speech_only = toy_examples(mc, 2, 1);
  speech_only.resize(2);
  CHECK_THROWS_AS(Trainer(model, speech_only, toy_train(2, 1, 5)), MixtureError);
  TrainConfig bad = toy_train(2, 1, 5);
  bad.accum_steps = 0;
  CHECK_THROWS_AS(Trainer(model, toy_examples(mc, 1, 1), bad), ConfigError);
}

TEST_CASE("non-finite parameters surface as a numerical error") {
  const ModelConfig mc = toy_model();
  Seq2SeqModel<float> model(mc, 1);
  Trainer t(model, toy_examples(mc, 2, 1), toy_train(2, 1, 5));
  model.encoder().conv1.weight.mutable_data()[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(t.train_step(), NumericalError);
}

TEST_CASE("train 100 equals train 50 then resume 50") {
  const ModelConfig mc = toy_model();
  const auto examples = toy_examples(mc, 3, 8);
  TrainConfig cfg = toy_train(2, 2, 100);
  cfg.checkpoint_every = 0;
  const auto eval = toy_examples(mc, 1, 99);

  const auto full_dir = temp_dir("full");
  Seq2SeqModel<float> full(mc, 3);
  Trainer tf(full, examples, cfg);
  const auto s_full = run_training(tf, eval, {full_dir, std::nullopt, 0, {}});
  CHECK(s_full.finished);

  const auto split_dir = temp_dir("split");
  {
    Seq2SeqModel<float> first(mc, 3);
    Trainer t1(first, examples, cfg);
    const auto s1 = run_training(t1, eval, {split_dir, std::nullopt, 50, {}});
    CHECK(!s1.finished);
    CHECK(s1.final_step == 50);
    CHECK(std::filesystem::exists(checkpoint_dir(split_dir, 50) / "optimizer.ckpt"));
  }
  // A different init seed proves every weight comes back from the checkpoint.
  Seq2SeqModel<float> second(mc, 1234);
  Trainer t2(second, examples, cfg);
  const auto s2 =
      run_training(t2, eval, {split_dir, checkpoint_dir(split_dir, 50), 0, {}});
  CHECK(s2.finished);
  CHECK(s2.steps_run == 50);

  CHECK(log_without_wall(full_dir / "train_log.jsonl") ==
        log_without_wall(split_dir / "train_log.jsonl"));
  CHECK(file_sha256(full_dir / "model.ckpt") == file_sha256(split_dir / "model.ckpt"));
  CHECK(file_sha256(full_dir / "encoder.ckpt") == file_sha256(split_dir / "encoder.ckpt"));

  SUBCASE("a different schedule length refuses the checkpoint") {
    Seq2SeqModel<float> m(mc, 3);
    Trainer t(m, examples, toy_train(2, 2, 80));
    CHECK_THROWS_AS(t.load_state(checkpoint_dir(split_dir, 50)), ConfigError);
  }
}

TEST_CASE("fixed seeds give identical checkpoints across runs") {
  const ModelConfig mc = toy_model();
  const auto examples = toy_examples(mc, 2, 5);
  std::string hashes[2];
  for (int r = 0; r < 2; ++r) {
    const auto dir = temp_dir("repeat" + std::to_string(r));
    Seq2SeqModel<float> m(mc, 8);
    Trainer t(m, examples, toy_train(2, 1, 20));
    run_training(t, {}, {dir, std::nullopt, 0, {}});
    hashes[r] = file_sha256(dir / "model.ckpt");
  }
  CHECK(hashes[0] == hashes[1]);
}

TEST_CASE("log records are JSON lines with the documented keys") {
  CHECK(to_jsonl(StepRecord{3, 0.5, 1.25, 7.0}) ==
        R"({"step":3,"lr":0.5,"train_loss":1.25,"wall_ms":7.0})");
  CHECK(to_jsonl(EvalRecord{4, 2.5}) == R"({"step":4,"eval_loss":2.5})");
}
