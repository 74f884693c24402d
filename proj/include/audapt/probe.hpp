// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Linear-probe evaluation of frozen encoders: mean-pooled features, fold and
// stratified splits, a zero-initialized affine classifier trained with Adam,
// and baseline-vs-adapted comparison tables.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "audapt/audio.hpp"
#include "audapt/model.hpp"

namespace audapt {

struct BenchmarkRecord {
  std::string audio_path;
  int label = 0;
  int fold = 0;  // 0 when the benchmark has no folds

  bool operator==(const BenchmarkRecord&) const = default;
};

enum class SplitRule { kFolds, kStratified };

struct BenchmarkSpec {
  std::string name;
  std::size_t n_classes = 0;
  std::vector<std::string> class_names;  // optional, n_classes entries when present
  SplitRule rule = SplitRule::kStratified;
  std::vector<int> train_folds;  // kFolds
  int test_fold = 0;             // kFolds
  double test_frac = 0.2;        // kStratified
  std::uint64_t split_seed = 0;  // kStratified

  void validate() const;
};

struct Benchmark {
  BenchmarkSpec spec;
  std::vector<BenchmarkRecord> records;
};

// A benchmark directory holds manifest.jsonl ({audio_path, label, fold?} per
// line) and benchmark.json ({benchmark_name, n_classes, split_rule, params}).
Benchmark load_benchmark(const std::filesystem::path& dir);
void save_benchmark(const std::filesystem::path& dir, const Benchmark& benchmark);

// Indices into the record list.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Records in train_folds go to train, records in test_fold to test, others
// are unused. Throws SplitError when test_fold is also a train fold or holds
// no records.
Split split_folds(const std::vector<BenchmarkRecord>& records,
                  const std::vector<int>& train_folds, int test_fold);

// Per class, round-half-up(test_frac * n_c) records go to test, picked by a
// seeded shuffle; if the total then differs from round(test_frac * N), the
// largest class gives or takes the difference. Throws SplitError when a class
// has fewer than two records.
Split split_stratified(const std::vector<BenchmarkRecord>& records, double test_frac,
                       std::uint64_t seed);

Split split_benchmark(const Benchmark& benchmark);

struct ProbeConfig {
  std::size_t epochs = 50;
  double lr = 1e-3;
  std::size_t batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  // Pool only encoder frames that overlap the clip; off pools every frame.
  bool pool_content_only = false;

  void validate() const;
};

// Row-major [n x dim] feature matrix with labels.
struct FeatureSet {
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  const double* row(std::size_t i) const { return values.data() + i * dim; }
  FeatureSet subset(const std::vector<std::size_t>& indices) const;
};

struct ProbeResult {
  std::vector<double> weight;  // [dim x n_classes]
  std::vector<double> bias;    // [n_classes]
  double accuracy = 0;         // correct / total over the test set
  std::vector<double> per_class_accuracy;  // NaN for classes absent from test
  std::vector<std::size_t> per_class_total;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  bool degenerate = false;  // the train split held a single class
};

// Argmax over logits; ties go to the lowest class index.
std::size_t predict(const ProbeResult& probe, const double* features, std::size_t dim);

ProbeResult train_probe(const FeatureSet& train, const FeatureSet& test,
                        std::size_t n_classes, const ProbeConfig& cfg);

// Mean over the time axis of encoder hidden states [frames x d]; a non-zero
// `frames` restricts the mean to the leading rows.
std::vector<double> mean_pool(const Tensor<float>& hidden, std::size_t frames = 0);

// Frontend -> encoder -> mean pool.
std::vector<double> embed(const MelSpectrogram& mel, const Encoder<float>& encoder,
                          bool content_only = false);
std::vector<double> embed(const AudioClip& clip, const Encoder<float>& encoder,
                          const FrontendConfig& frontend, bool content_only = false);

// Log-mels of every record, in record order, computed in parallel.
std::vector<MelSpectrogram> benchmark_mels(const Benchmark& benchmark,
                                           const FrontendConfig& frontend);
FeatureSet embed_all(const std::vector<MelSpectrogram>& mels,
                     const std::vector<BenchmarkRecord>& records,
                     const Encoder<float>& encoder, bool content_only = false);

struct ProbeReport {
  std::string benchmark;
  std::string encoder_id;
  ProbeResult result;
};

struct ComparisonRow {
  std::string benchmark;
  ProbeReport baseline;
  ProbeReport adapted;
  double delta = 0;  // adapted - baseline, accuracy points
};

struct ComparisonTable {
  std::string baseline_id;
  std::string adapted_id;
  std::vector<ComparisonRow> rows;
};

// Probes one encoder on each benchmark. Throws ConfigError when the encoder
// input width disagrees with the frontend.
std::vector<ProbeReport> probe_encoder(const EncoderCheckpoint& encoder,
                                       const std::string& encoder_id,
                                       const std::vector<Benchmark>& benchmarks,
                                       const FrontendConfig& frontend,
                                       const ProbeConfig& cfg);

// Same mels, splits, seeds and probe config for both encoders. Throws
// ComparisonError when d_model differs.
ComparisonTable compare_encoders(const EncoderCheckpoint& baseline,
                                 const std::string& baseline_id,
                                 const EncoderCheckpoint& adapted,
                                 const std::string& adapted_id,
                                 const std::vector<Benchmark>& benchmarks,
                                 const FrontendConfig& frontend, const ProbeConfig& cfg);

// JSON documents written by the probe and compare commands, and the text and
// CSV renderings produced by report.
std::string probe_reports_json(const std::vector<ProbeReport>& reports,
                               const std::vector<Benchmark>& benchmarks);
std::string comparison_json(const ComparisonTable& table,
                            const std::vector<Benchmark>& benchmarks);
ComparisonTable parse_comparison_json(const std::string& text);
std::string render_comparison_text(const ComparisonTable& table);
std::string render_comparison_csv(const ComparisonTable& table);

}  // namespace audapt
