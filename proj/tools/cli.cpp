// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "audapt/config.hpp"
#include "audapt/data.hpp"
#include "audapt/error.hpp"
#include "audapt/model.hpp"
#include "audapt/probe.hpp"
#include "audapt/synth.hpp"
#include "audapt/trainer.hpp"

namespace audapt::cli {
namespace {

namespace fs = std::filesystem;

void log(const std::string& line) { std::cerr << line << std::endl; }

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IOError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream os(path, std::ios::trunc);
  os << text;
  os.flush();
  if (!os) throw IOError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw IOError(what + " not found: " + path.string());
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string percent(double accuracy) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << 100.0 * accuracy;
  return os.str();
}

// --config, --set and --seed, shared by every command that needs settings.
struct ConfigOptions {
  std::string file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", file, "Flat 'key = value' config file");
    cmd->add_option("--set", overrides, "Override one config key as key=value (repeatable)");
    cmd->add_option("--seed", seed, "Seed for model init, sampling, probes and synthesis");
  }

  // Relative paths inside the config file are anchored at `anchor`.
  RunConfig resolve(const fs::path& anchor) const {
    RunConfig rc;
    if (!file.empty()) {
      rc.apply(read_config_file(file));
      rc.resolve_paths(anchor);
    }
    for (const auto& o : overrides) {
      const auto [k, v] = parse_override(o);
      rc.set(k, v);
    }
    if (seed) rc.set("seed", std::to_string(*seed));
    rc.validate();
    return rc;
  }
};

std::vector<Benchmark> load_benchmarks(const std::string& flag, const RunConfig& rc) {
  std::vector<fs::path> dirs;
  for (const auto& d : split_list(flag)) dirs.emplace_back(d);
  if (dirs.empty()) dirs = rc.paths.benchmarks;
  if (dirs.empty()) throw ConfigError("no benchmarks: pass --benchmarks or set paths.benchmarks");
  std::vector<Benchmark> out;
  for (const auto& d : dirs) {
    require_file(d / "benchmark.json", "benchmark sidecar");
    out.push_back(load_benchmark(d));
  }
  return out;
}

fs::path config_echo_path(const fs::path& out_file) {
  return fs::path(out_file.string() + ".config.txt");
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  ConfigOptions cfg;
  std::string out_dir;
  std::string domains = "speech,sound,music";
  std::size_t n_per_domain = 10;
  std::string benchmark;
  std::size_t clips_per_class = 40;

  void run() const {
    const fs::path out = out_dir;
    const RunConfig rc = cfg.resolve(out);
    write_text(out / "run_config.txt", rc.to_text());
    if (!benchmark.empty()) {
      const BenchmarkKind kind = parse_benchmark_kind(benchmark);
      const Benchmark b = synth_benchmark(out, kind, clips_per_class, rc.synth);
      log("wrote benchmark '" + b.spec.name + "' with " + std::to_string(b.records.size()) +
          " clips to " + out.string());
      return;
    }
    std::vector<Domain> list;
    for (const auto& name : split_list(domains)) {
      try {
        list.push_back(parse_domain(name));
      } catch (const DataError&) {
        throw ConfigError("unknown domain '" + name + "' (speech, sound, music)");
      }
    }
    const auto records = synth_corpus(out, list, n_per_domain, rc.synth);
    log("wrote " + std::to_string(records.size()) + " clips and " +
        (out / "manifest.jsonl").string());
  }
};

struct TrainArgs {
  ConfigOptions cfg;
  std::string out_dir;
  std::string manifest;
  std::string eval_manifest;
  std::string resume;
  std::size_t stop_at = 0;

  std::vector<TrainExample> load(const fs::path& path, const RunConfig& rc,
                                 const std::string& what) const {
    require_file(path, what);
    const auto records = load_manifest(path);
    const auto kept = filter_captions(records, rc.model.max_decoder_len);
    if (kept.size() < records.size())
      log(what + ": dropped " + std::to_string(records.size() - kept.size()) +
          " records whose captions exceed " + std::to_string(rc.model.max_decoder_len) +
          " tokens");
    if (kept.empty()) throw DataError(what + " has no usable records: " + path.string());
    return prepare_examples(kept, rc.frontend, rc.model, rc.train.domain_prefix);
  }

  void run() const {
    const fs::path out = out_dir;
    RunConfig rc = cfg.resolve(out);
    if (!manifest.empty()) rc.paths.manifest = manifest;
    if (!eval_manifest.empty()) rc.paths.eval_manifest = eval_manifest;
    if (rc.paths.manifest.empty())
      throw ConfigError("no training manifest: pass --manifest or set paths.manifest");
    if (!resume.empty()) require_file(fs::path(resume) / "trainer_state.json", "resume state");
    write_text(out / "run_config.txt", rc.to_text());

    auto examples = load(rc.paths.manifest, rc, "training manifest");
    std::vector<TrainExample> eval;
    if (!rc.paths.eval_manifest.empty()) eval = load(rc.paths.eval_manifest, rc, "eval manifest");

    Seq2SeqModel<float> model(rc.model, rc.model_seed);
    const std::size_t n = examples.size();
    Trainer trainer(model, std::move(examples), rc.train);
    log("training " + std::to_string(model.parameter_count()) + " parameters on " +
        std::to_string(n) + " clips: " + std::to_string(trainer.total_steps()) + " steps of " +
        std::to_string(rc.train.effective_batch()) + " examples");

    TrainRunOptions opts;
    opts.out_dir = out;
    if (!resume.empty()) opts.resume_from = fs::path(resume);
    opts.stop_at = stop_at;
    opts.progress = log;
    const TrainRunSummary s = run_training(trainer, eval, opts);
    if (s.finished) {
      log("finished at step " + std::to_string(s.final_step) + "; encoder sha256 " +
          file_sha256(out / "encoder.ckpt"));
    } else {
      log("stopped at step " + std::to_string(s.final_step) + " of " +
          std::to_string(s.total_steps) + "; resume from " +
          checkpoint_dir(out, s.final_step).string());
    }
  }
};

struct ExtractArgs {
  ConfigOptions cfg;
  std::string model;
  std::string out;
  bool init = false;

  void run() const {
    if (init == !model.empty())
      throw ConfigError("pass exactly one of --model or --init");
    EncoderCheckpoint ckpt;
    if (init) {
      const RunConfig rc = cfg.resolve(fs::path(out).parent_path());
      const Seq2SeqModel<float> m(rc.model, rc.model_seed);
      ckpt = extract_encoder(m);
    } else {
      require_file(model, "model checkpoint");
      Seq2SeqModel<float> m(read_model_config(model), 0);
      load_model(model, m);
      ckpt = extract_encoder(m);
    }
    save_encoder(out, ckpt);
    log("wrote encoder with " + std::to_string(ckpt.parameter_count()) + " parameters to " + out +
        " (sha256 " + file_sha256(out) + ")");
  }
};

struct ProbeArgs {
  ConfigOptions cfg;
  std::string encoder;
  std::string benchmarks;
  std::string out;
  std::string id;

  void run() const {
    const RunConfig rc = cfg.resolve(fs::path(out).parent_path());
    require_file(encoder, "encoder checkpoint");
    const EncoderCheckpoint ckpt = load_encoder(encoder);
    if (ckpt.config.d_model != rc.model.d_model)
      throw ConfigError("encoder d_model " + std::to_string(ckpt.config.d_model) +
                        " differs from configured model.d_model " +
                        std::to_string(rc.model.d_model));
    const auto benches = load_benchmarks(benchmarks, rc);
    const std::string name = id.empty() ? fs::path(encoder).stem().string() : id;
    const auto reports = probe_encoder(ckpt, name, benches, rc.frontend, rc.probe);
    write_text(out, probe_reports_json(reports, benches));
    write_text(config_echo_path(out), rc.to_text());
    for (const auto& r : reports) log(r.benchmark + ": " + percent(r.result.accuracy) + "%");
  }
};

struct CompareArgs {
  ConfigOptions cfg;
  std::string baseline;
  std::string adapted;
  std::string benchmarks;
  std::string out;
  std::string baseline_id = "baseline";
  std::string adapted_id = "adapted";

  void run() const {
    const RunConfig rc = cfg.resolve(fs::path(out).parent_path());
    require_file(baseline, "baseline encoder");
    require_file(adapted, "adapted encoder");
    const EncoderCheckpoint base = load_encoder(baseline);
    const EncoderCheckpoint adapt = load_encoder(adapted);
    const auto benches = load_benchmarks(benchmarks, rc);
    const ComparisonTable table =
        compare_encoders(base, baseline_id, adapt, adapted_id, benches, rc.frontend, rc.probe);
    write_text(out, comparison_json(table, benches));
    write_text(config_echo_path(out), rc.to_text());
    std::cerr << render_comparison_text(table);
  }
};

struct ReportArgs {
  std::string comparison;
  std::string format = "text";
  std::string out;

  void run() const {
    const ComparisonTable table = parse_comparison_json(read_text(comparison));
    std::string text;
    if (format == "text") text = render_comparison_text(table);
    else if (format == "csv") text = render_comparison_csv(table);
    else throw ConfigError("unknown report format '" + format + "' (text, csv)");
    if (out.empty()) std::cout << text << std::flush;
    else write_text(out, text);
  }
};

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"audapt: adapt an audio encoder by captioning, then probe it"};
  app.name("audapt");
  app.require_subcommand(1);

  std::function<void()> action;
  SynthArgs synth;
  TrainArgs train;
  ExtractArgs extract;
  ProbeArgs probe;
  CompareArgs compare;
  ReportArgs report;

  auto* s = app.add_subcommand("synth-corpus", "Write a synthetic captioned corpus or benchmark");
  synth.cfg.attach(s);
  s->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  s->add_option("--domains", synth.domains, "Comma-separated domains (speech,sound,music)");
  s->add_option("--n-per-domain", synth.n_per_domain, "Clips per domain");
  s->add_option("--benchmark", synth.benchmark,
                "Write a labelled benchmark instead (keywords, environment, genre)");
  s->add_option("--clips-per-class", synth.clips_per_class, "Benchmark clips per class");
  s->callback([&] { action = [&] { synth.run(); }; });

  auto* t = app.add_subcommand("train", "Fine-tune the encoder-decoder on a captioned manifest");
  train.cfg.attach(t);
  t->add_option("--out-dir", train.out_dir, "Run directory")->required();
  t->add_option("--manifest", train.manifest, "Training manifest (JSONL)");
  t->add_option("--eval-manifest", train.eval_manifest, "Held-out manifest (JSONL)");
  t->add_option("--resume", train.resume, "Checkpoint directory to resume from");
  t->add_option("--stop-at", train.stop_at, "Stop and checkpoint after this step");
  t->callback([&] { action = [&] { train.run(); }; });

  auto* e = app.add_subcommand("extract-encoder", "Keep the encoder of a trained model");
  extract.cfg.attach(e);
  e->add_option("--model", extract.model, "Full model checkpoint");
  e->add_flag("--init", extract.init, "Extract the untrained encoder built from the config and seed");
  e->add_option("--out", extract.out, "Encoder checkpoint to write")->required();
  e->callback([&] { action = [&] { extract.run(); }; });

  auto* p = app.add_subcommand("probe", "Linear-probe one encoder on benchmarks");
  probe.cfg.attach(p);
  p->add_option("--encoder", probe.encoder, "Encoder checkpoint")->required();
  p->add_option("--benchmarks", probe.benchmarks, "Comma-separated benchmark directories");
  p->add_option("--out", probe.out, "Report JSON to write")->required();
  p->add_option("--id", probe.id, "Encoder name in the report");
  p->callback([&] { action = [&] { probe.run(); }; });

  auto* c = app.add_subcommand("compare", "Probe two encoders under one protocol");
  compare.cfg.attach(c);
  c->add_option("--baseline", compare.baseline, "Baseline encoder checkpoint")->required();
  c->add_option("--adapted", compare.adapted, "Adapted encoder checkpoint")->required();
  c->add_option("--benchmarks", compare.benchmarks, "Comma-separated benchmark directories");
  c->add_option("--out", compare.out, "Comparison JSON to write")->required();
  c->add_option("--baseline-id", compare.baseline_id, "Baseline name in the table");
  c->add_option("--adapted-id", compare.adapted_id, "Adapted name in the table");
  c->callback([&] { action = [&] { compare.run(); }; });

  auto* r = app.add_subcommand("report", "Render a comparison as a text or CSV table");
  r->add_option("--comparison", report.comparison, "Comparison JSON")->required();
  r->add_option("--format", report.format, "text or csv");
  r->add_option("--out", report.out, "Write here instead of stdout");
  r->callback([&] { action = [&] { report.run(); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::kConfig);
  }

  try {
    if (action) action();
    return 0;
  } catch (const Error& err) {
    log(std::string("error: ") + err.what());
    return err.exit_code();
  } catch (const fs::filesystem_error& err) {
    log(std::string("error: ") + err.what());
    return static_cast<int>(ErrorCategory::kIO);
  } catch (const std::exception& err) {
    log(std::string("error: unexpected: ") + err.what());
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"audapt"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace audapt::cli
