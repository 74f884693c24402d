// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "audapt/config.hpp"
#include "audapt/data.hpp"
#include "audapt/error.hpp"
#include "audapt/model.hpp"
#include "cli.hpp"

using namespace audapt;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("audapt_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

// A config small enough to train in well under a second per step.
fs::path tiny_config(const fs::path& dir) {
  const fs::path p = dir / "tiny.conf";
  std::ofstream(p) << "# tiny model for command tests\n"
                      "model.d_model = 8\n"
                      "model.n_heads = 2\n"
                      "model.n_enc_layers = 1\n"
                      "model.n_dec_layers = 1\n"
                      "model.max_encoder_frames = 5\n"
                      "model.n_mels = 16\n"
                      "frontend.n_mels = 16\n"
                      "frontend.window_s = 0.1\n"
                      "train.micro_batch = 2\n"
                      "train.accum_steps = 1\n"
                      "train.max_steps = 6\n"
                      "train.peak_lr = 0.001\n"
                      "probe.epochs = 5\n"
                      "synth.max_duration_s = 1.2\n"
                      "seed = 3\n";
  return p;
}

}  // namespace

TEST_CASE("config files parse, override and echo") {
  const auto kv = parse_key_values("a = 1\n\n# note\nb=two words # trailing\n", "t");
  REQUIRE(kv.size() == 2);
  CHECK(kv[1] == std::pair<std::string, std::string>{"b", "two words"});
  CHECK_THROWS_AS(parse_key_values("novalue\n"), ConfigError);
  CHECK_THROWS_AS(parse_key_values("a=1\na=2\n"), ConfigError);
  CHECK_THROWS_AS(parse_override("justakey"), ConfigError);

  RunConfig rc;
  rc.set("seed", "9");
  CHECK(rc.model_seed == 9);
  CHECK(rc.train.seed == 9);
  CHECK(rc.probe.seed == 9);
  CHECK(rc.synth.seed == 9);
  rc.set("train.peak_lr", "0.00025");
  rc.set("paths.benchmarks", "a, b ,c");
  CHECK(rc.paths.benchmarks.size() == 3);
  CHECK_THROWS_AS(rc.set("train.nonsense", "1"), ConfigError);
  CHECK_THROWS_AS(rc.set("train.epochs", "two"), ConfigError);
  CHECK_THROWS_AS(rc.set("train.domain_prefix", "yes"), ConfigError);

  RunConfig back;
  back.apply(parse_key_values(rc.to_text()));
  CHECK(back.to_text() == rc.to_text());
  CHECK(back.train.peak_lr == 0.00025);

  rc.validate();
  rc.set("frontend.window_s", "3");
  CHECK_THROWS_AS(rc.validate(), ConfigError);
  rc.set("model.max_encoder_frames", "150");
  rc.validate();
  rc.set("model.vocab_size", "260");
  CHECK_THROWS_AS(rc.validate(), ConfigError);
}

TEST_CASE("synth-corpus writes a deterministic corpus") {
  const auto dir = temp_dir("synth");
  const std::vector<std::string> base = {"synth-corpus", "--n-per-domain", "10", "--seed", "4",
                                         "--set", "synth.max_duration_s=2"};
  auto with_out = [&](const fs::path& out) {
    auto args = base;
    args.insert(args.end(), {"--out-dir", out.string()});
    return args;
  };
  REQUIRE(cli::run(with_out(dir / "a")) == 0);
  REQUIRE(cli::run(with_out(dir / "b")) == 0);
  CHECK(count_lines(dir / "a" / "manifest.jsonl") == 30);
  std::size_t wavs = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a" / "audio"))
    wavs += e.path().extension() == ".wav";
  CHECK(wavs == 30);
  CHECK(file_sha256(dir / "a" / "manifest.jsonl") == file_sha256(dir / "b" / "manifest.jsonl"));
  for (const auto& r : load_manifest(dir / "a" / "manifest.jsonl")) {
    const double d = read_wav(r.audio_path).duration_s();
    CHECK(d >= 1.0 - 1e-3);
    CHECK(d <= 2.0 + 1e-3);
  }
  CHECK(slurp(dir / "a" / "run_config.txt").find("synth.seed = 4") != std::string::npos);
}

TEST_CASE("command-line and config errors map to exit codes") {
  const auto dir = temp_dir("errors");
  CHECK(cli::run(std::vector<std::string>{}) == 2);
  CHECK(cli::run({"dance"}) == 2);
  CHECK(cli::run({"synth-corpus"}) == 2);
  CHECK(cli::run({"synth-corpus", "--out-dir", (dir / "x").string(), "--set", "nope=1"}) == 2);
  CHECK(cli::run({"synth-corpus", "--out-dir", (dir / "x").string(), "--domains", "speech,noise"}) == 2);
  CHECK(cli::run({"synth-corpus", "--out-dir", (dir / "x").string(), "--config",
                  (dir / "missing.conf").string()}) == 5);
  std::ofstream(dir / "blocker") << "file";
  CHECK(cli::run({"synth-corpus", "--out-dir", (dir / "blocker" / "sub").string()}) == 5);
  CHECK(cli::run({"train", "--out-dir", (dir / "run").string()}) == 2);
  CHECK(cli::run({"train", "--out-dir", (dir / "run").string(), "--manifest",
                  (dir / "absent.jsonl").string()}) == 5);
  std::ofstream(dir / "bad.jsonl") << "{\"audio_path\":\"a.wav\",\"text\":\"x\",\"domain\":\"voice\"}\n";
  CHECK(cli::run({"train", "--out-dir", (dir / "run").string(), "--manifest",
                  (dir / "bad.jsonl").string()}) == 3);
  CHECK(cli::run({"report", "--comparison", (dir / "none.json").string()}) == 5);
  std::ofstream(dir / "garbage.json") << "not json";
  CHECK(cli::run({"report", "--comparison", (dir / "garbage.json").string()}) == 3);
  CHECK(cli::run({"extract-encoder", "--out", (dir / "e.ckpt").string()}) == 2);
}

TEST_CASE("pipeline: synth, train, resume, extract, probe, compare, report") {
  const auto dir = temp_dir("pipeline");
  const std::string conf = tiny_config(dir).string();
  auto run = [](std::vector<std::string> args) { return cli::run(args); };

  REQUIRE(run({"synth-corpus", "--config", conf, "--out-dir", (dir / "corpus").string(),
               "--n-per-domain", "4"}) == 0);
  REQUIRE(run({"synth-corpus", "--config", conf, "--out-dir", (dir / "bench").string(),
               "--benchmark", "environment", "--clips-per-class", "5"}) == 0);
  const std::string manifest = (dir / "corpus" / "manifest.jsonl").string();

  REQUIRE(run({"train", "--config", conf, "--out-dir", (dir / "full").string(), "--manifest",
               manifest, "--eval-manifest", manifest}) == 0);
  CHECK(fs::exists(dir / "full" / "encoder.ckpt"));
  CHECK(fs::exists(dir / "full" / "run_config.txt"));
  CHECK(count_lines(dir / "full" / "train_log.jsonl") == 6 + 1);

  REQUIRE(run({"train", "--config", conf, "--out-dir", (dir / "split").string(), "--manifest",
               manifest, "--eval-manifest", manifest, "--stop-at", "3"}) == 0);
  CHECK(!fs::exists(dir / "split" / "model.ckpt"));
  REQUIRE(run({"train", "--config", conf, "--out-dir", (dir / "split").string(), "--manifest",
               manifest, "--eval-manifest", manifest, "--resume",
               (dir / "split" / "checkpoints" / "step_000003").string()}) == 0);
  CHECK(file_sha256(dir / "full" / "model.ckpt") == file_sha256(dir / "split" / "model.ckpt"));
  CHECK(run({"train", "--config", conf, "--out-dir", (dir / "split").string(), "--manifest",
             manifest, "--resume", (dir / "nowhere").string()}) == 5);

  const std::string trained = (dir / "trained.ckpt").string();
  const std::string init = (dir / "init.ckpt").string();
  REQUIRE(run({"extract-encoder", "--model", (dir / "full" / "model.ckpt").string(), "--out",
               trained}) == 0);
  CHECK(file_sha256(trained) == file_sha256(dir / "full" / "encoder.ckpt"));
  REQUIRE(run({"extract-encoder", "--config", conf, "--init", "--out", init}) == 0);
  CHECK(load_encoder(init).parameter_count() == load_encoder(trained).parameter_count());

  const std::string bench = (dir / "bench").string();
  REQUIRE(run({"probe", "--config", conf, "--encoder", trained, "--benchmarks", bench, "--out",
               (dir / "probe.json").string()}) == 0);
  CHECK(slurp(dir / "probe.json").find("\"environment\"") != std::string::npos);
  // A width mismatch is a configuration problem, not an I/O failure.
  CHECK(run({"probe", "--config", conf, "--set", "model.d_model=16", "--encoder", trained,
             "--benchmarks", bench, "--out", (dir / "p2.json").string()}) == 2);

  const std::string self = (dir / "self.json").string();
  REQUIRE(run({"compare", "--config", conf, "--baseline", init, "--adapted", init,
               "--benchmarks", bench, "--out", self}) == 0);
  REQUIRE(run({"report", "--comparison", self, "--out", (dir / "self.txt").string()}) == 0);
  const std::string text = slurp(dir / "self.txt");
  CHECK(text.find("environment") != std::string::npos);
  CHECK(text.find("0.00") != std::string::npos);
  CHECK(text.find("+0.00") == std::string::npos);
  REQUIRE(run({"report", "--comparison", self, "--format", "csv", "--out",
               (dir / "self.csv").string()}) == 0);
  CHECK(slurp(dir / "self.csv").rfind("benchmark,baseline,adapted,delta\n", 0) == 0);
  CHECK(run({"report", "--comparison", self, "--format", "xml"}) == 2);

  // Encoders of different widths cannot be compared.
  const std::string wide = (dir / "wide.ckpt").string();
  REQUIRE(run({"extract-encoder", "--config", conf, "--set", "model.d_model=12", "--init",
               "--out", wide}) == 0);
  CHECK(run({"compare", "--config", conf, "--baseline", init, "--adapted", wide,
             "--benchmarks", bench, "--out", (dir / "bad.json").string()}) == 3);
}
