// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "audapt/probe.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "audapt/error.hpp"
#include "audapt/optim.hpp"
#include "audapt/rng.hpp"

namespace audapt {

using json = nlohmann::ordered_json;

void BenchmarkSpec::validate() const {
  if (name.empty()) throw ConfigError("benchmark needs a name");
  if (n_classes < 2) throw ConfigError("benchmark '" + name + "' needs at least two classes");
  if (!class_names.empty() && class_names.size() != n_classes)
    throw ConfigError("benchmark '" + name + "' lists the wrong number of class names");
  if (rule == SplitRule::kFolds && train_folds.empty())
    throw ConfigError("benchmark '" + name + "' has no train folds");
  if (rule == SplitRule::kStratified && !(test_frac > 0 && test_frac < 1))
    throw ConfigError("benchmark '" + name + "' test_frac must lie in (0, 1)");
}

Benchmark load_benchmark(const std::filesystem::path& dir) {
  Benchmark b;
  const auto meta_path = dir / "benchmark.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw IOError("cannot open " + meta_path.string());
  try {
    const json meta = json::parse(meta_in);
    b.spec.name = meta.at("benchmark_name").get<std::string>();
    b.spec.n_classes = meta.at("n_classes").get<std::size_t>();
    if (meta.contains("class_names"))
      b.spec.class_names = meta["class_names"].get<std::vector<std::string>>();
    const auto rule = meta.at("split_rule").get<std::string>();
    const json& params = meta.at("params");
    if (rule == "folds") {
      b.spec.rule = SplitRule::kFolds;
      b.spec.train_folds = params.at("train_folds").get<std::vector<int>>();
      b.spec.test_fold = params.at("test_fold").get<int>();
    } else if (rule == "stratified") {
      b.spec.rule = SplitRule::kStratified;
      b.spec.test_frac = params.at("test_frac").get<double>();
      b.spec.split_seed = params.at("seed").get<std::uint64_t>();
    } else {
      throw ConfigError(meta_path.string() + ": unknown split_rule '" + rule + "'");
    }
  } catch (const json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
  b.spec.validate();

  const auto manifest_path = dir / "manifest.jsonl";
  std::ifstream in(manifest_path);
  if (!in) throw IOError("cannot open " + manifest_path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    BenchmarkRecord r;
    try {
      const json j = json::parse(line);
      r.audio_path = j.at("audio_path").get<std::string>();
      r.label = j.at("label").get<int>();
      r.fold = j.value("fold", 0);
    } catch (const json::exception& e) {
      throw ManifestError(line_no, e.what());
    }
    if (r.label < 0 || static_cast<std::size_t>(r.label) >= b.spec.n_classes)
      throw ManifestError(line_no, "label " + std::to_string(r.label) + " out of range");
    if (std::filesystem::path(r.audio_path).is_relative())
      r.audio_path = (dir / r.audio_path).string();
    b.records.push_back(std::move(r));
  }
  if (b.records.empty()) throw DataError(manifest_path.string() + " holds no records");
  return b;
}

void save_benchmark(const std::filesystem::path& dir, const Benchmark& b) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IOError("cannot create " + dir.string() + ": " + ec.message());
  json meta;
  meta["benchmark_name"] = b.spec.name;
  meta["n_classes"] = b.spec.n_classes;
  if (!b.spec.class_names.empty()) meta["class_names"] = b.spec.class_names;
  if (b.spec.rule == SplitRule::kFolds) {
    meta["split_rule"] = "folds";
    meta["params"] = {{"train_folds", b.spec.train_folds}, {"test_fold", b.spec.test_fold}};
  } else {
    meta["split_rule"] = "stratified";
    meta["params"] = {{"test_frac", b.spec.test_frac}, {"seed", b.spec.split_seed}};
  }
  std::ofstream meta_out(dir / "benchmark.json", std::ios::trunc);
  meta_out << meta.dump(2) << '\n';
  std::ofstream out(dir / "manifest.jsonl", std::ios::trunc);
  for (const auto& r : b.records) {
    json j;
    j["audio_path"] = r.audio_path;
    j["label"] = r.label;
    if (r.fold != 0) j["fold"] = r.fold;
    out << j.dump() << '\n';
  }
  if (!meta_out || !out) throw IOError("cannot write benchmark files in " + dir.string());
}

Split split_folds(const std::vector<BenchmarkRecord>& records,
                  const std::vector<int>& train_folds, int test_fold) {
  const std::set<int> train_set(train_folds.begin(), train_folds.end());
  if (train_set.count(test_fold))
    throw SplitError("fold " + std::to_string(test_fold) + " requested as both train and test");
  Split s;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].fold == test_fold) s.test.push_back(i);
    else if (train_set.count(records[i].fold)) s.train.push_back(i);
  }
  if (s.test.empty()) throw SplitError("test fold " + std::to_string(test_fold) + " is empty");
  return s;
}

namespace {

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

}  // namespace

Split split_stratified(const std::vector<BenchmarkRecord>& records, double test_frac,
                       std::uint64_t seed) {
  if (!(test_frac > 0 && test_frac < 1)) throw SplitError("test_frac must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) by_class[records[i].label].push_back(i);
  std::map<int, std::size_t> n_test;
  std::size_t assigned = 0;
  int largest = 0;
  std::size_t largest_size = 0;
  for (const auto& [label, members] : by_class) {
    if (members.size() < 2)
      throw SplitError("class " + std::to_string(label) + " has fewer than two records");
    n_test[label] = round_half_up(test_frac * static_cast<double>(members.size()));
    assigned += n_test[label];
    if (members.size() > largest_size) largest = label, largest_size = members.size();
  }
  const std::size_t target = round_half_up(test_frac * static_cast<double>(records.size()));
  if (assigned < target) n_test[largest] += target - assigned;
  if (assigned > target) n_test[largest] -= std::min(assigned - target, n_test[largest]);
  if (n_test[largest] >= largest_size) throw SplitError("stratified split leaves no training data");

  std::mt19937_64 rng(seed);
  Split s;
  for (auto& [label, members] : by_class) {
    shuffle_in_place(std::span<std::size_t>(members), rng);
    const std::size_t k = n_test[label];
    s.test.insert(s.test.end(), members.begin(), members.begin() + static_cast<long>(k));
    s.train.insert(s.train.end(), members.begin() + static_cast<long>(k), members.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Split split_benchmark(const Benchmark& b) {
  if (b.spec.rule == SplitRule::kFolds)
    return split_folds(b.records, b.spec.train_folds, b.spec.test_fold);
  return split_stratified(b.records, b.spec.test_frac, b.spec.split_seed);
}

void ProbeConfig::validate() const {
  if (epochs == 0 || batch_size == 0) throw ConfigError("probe epochs and batch size must be positive");
  if (!(lr > 0)) throw ConfigError("probe lr must be positive");
}

FeatureSet FeatureSet::subset(const std::vector<std::size_t>& indices) const {
  FeatureSet out;
  out.dim = dim;
  out.values.reserve(indices.size() * dim);
  for (std::size_t i : indices) {
    out.values.insert(out.values.end(), row(i), row(i) + dim);
    out.labels.push_back(labels[i]);
  }
  return out;
}

std::size_t predict(const ProbeResult& probe, const double* x, std::size_t dim) {
  const std::size_t c = probe.bias.size();
  std::size_t best = 0;
  double best_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < c; ++k) {
    double z = probe.bias[k];
    for (std::size_t j = 0; j < dim; ++j) z += x[j] * probe.weight[j * c + k];
    if (z > best_logit) best_logit = z, best = k;
  }
  return best;
}

ProbeResult train_probe(const FeatureSet& train, const FeatureSet& test,
                        std::size_t n_classes, const ProbeConfig& cfg) {
  cfg.validate();
  if (train.size() == 0) throw DataError("probe train split is empty");
  if (test.size() == 0) throw DataError("probe test split is empty");
  if (train.dim != test.dim) throw ShapeError("train and test feature widths differ");
  for (double v : train.values)
    if (!std::isfinite(v)) throw NumericalError("non-finite probe feature");
  const std::size_t d = train.dim;

  ProbeResult res;
  res.n_train = train.size();
  res.n_test = test.size();
  const std::set<int> seen(train.labels.begin(), train.labels.end());
  res.degenerate = seen.size() < 2;

  using Td = Tensor<double>;
  Td weight = Td::zeros({d, n_classes}, true);
  Td bias = Td::zeros({n_classes}, true);
  std::vector<Td> params{weight, bias};
  AdamState<double> adam;
  adam.init(params);
  const AdamConfig adam_cfg{cfg.beta1, cfg.beta2, cfg.eps, 0.0};

  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(mix_seed(cfg.seed, epoch));
    shuffle_in_place(std::span<std::size_t>(order), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      std::vector<double> x(n * d);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::copy(train.row(order[start + i]), train.row(order[start + i]) + d,
                  x.begin() + static_cast<long>(i * d));
        y[i] = train.labels[order[start + i]];
      }
      for (auto& p : params) p.zero_grad();
      const Td logits = add(matmul(Td::from({n, d}, std::move(x)), weight), bias);
      backward(cross_entropy(logits, y));
      adamw_step(params, adam, cfg.lr, adam_cfg);
    }
  }
  res.weight.assign(weight.data().begin(), weight.data().end());
  res.bias.assign(bias.data().begin(), bias.data().end());

  std::vector<std::size_t> correct(n_classes, 0);
  res.per_class_total.assign(n_classes, 0);
  std::size_t total_correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto label = static_cast<std::size_t>(test.labels[i]);
    const bool ok = predict(res, test.row(i), d) == label;
    ++res.per_class_total[label];
    correct[label] += ok;
    total_correct += ok;
  }
  res.accuracy = static_cast<double>(total_correct) / static_cast<double>(test.size());
  res.per_class_accuracy.resize(n_classes);
  for (std::size_t k = 0; k < n_classes; ++k)
    res.per_class_accuracy[k] = res.per_class_total[k]
                                    ? static_cast<double>(correct[k]) / res.per_class_total[k]
                                    : std::numeric_limits<double>::quiet_NaN();
  return res;
}

std::vector<double> mean_pool(const Tensor<float>& hidden, std::size_t frames) {
  if (hidden.rank() != 2 || hidden.dim(0) == 0) throw ShapeError("mean_pool expects [frames x d]");
  const std::size_t t = frames == 0 ? hidden.dim(0) : std::min(frames, hidden.dim(0));
  const std::size_t d = hidden.dim(1);
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < d; ++j) out[j] += hidden.data()[i * d + j];
  for (auto& v : out) v /= static_cast<double>(t);
  return out;
}

std::vector<double> embed(const MelSpectrogram& mel, const Encoder<float>& encoder,
                          bool content_only) {
  NoGradGuard guard;
  // The encoder halves the frame rate.
  const std::size_t frames = content_only ? (std::max<std::size_t>(mel.content_frames, 1) + 1) / 2 : 0;
  return mean_pool(encoder.encode(mel), frames);
}

std::vector<double> embed(const AudioClip& clip, const Encoder<float>& encoder,
                          const FrontendConfig& frontend, bool content_only) {
  return embed(mel_from_clip(clip, frontend), encoder, content_only);
}

std::vector<MelSpectrogram> benchmark_mels(const Benchmark& b, const FrontendConfig& frontend) {
  frontend.validate();
  std::vector<MelSpectrogram> mels(b.records.size());
  std::vector<std::exception_ptr> errors(b.records.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < b.records.size(); ++i) {
    try {
      mels[i] = mel_from_file(b.records[i].audio_path, frontend);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return mels;
}

FeatureSet embed_all(const std::vector<MelSpectrogram>& mels,
                     const std::vector<BenchmarkRecord>& records,
                     const Encoder<float>& encoder, bool content_only) {
  if (mels.size() != records.size()) throw ShapeError("one mel per record expected");
  FeatureSet fs;
  fs.dim = encoder.config().d_model;
  fs.values.resize(mels.size() * fs.dim);
  fs.labels.resize(mels.size());
  std::vector<std::exception_ptr> errors(mels.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < mels.size(); ++i) {
    try {
      const auto v = embed(mels[i], encoder, content_only);
      std::copy(v.begin(), v.end(), fs.values.begin() + static_cast<long>(i * fs.dim));
      fs.labels[i] = records[i].label;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return fs;
}

namespace {

void check_frontend(const EncoderConfig& enc, const FrontendConfig& frontend) {
  if (frontend.n_mels != enc.n_mels || frontend.n_frames() != 2 * enc.max_frames)
    throw ConfigError("frontend yields " + std::to_string(frontend.n_mels) + "x" +
                      std::to_string(frontend.n_frames()) + " mels, encoder expects " +
                      std::to_string(enc.n_mels) + "x" + std::to_string(2 * enc.max_frames));
}

ProbeResult probe_one(const Benchmark& b, const Split& split, const FeatureSet& features,
                      const ProbeConfig& cfg) {
  return train_probe(features.subset(split.train), features.subset(split.test),
                     b.spec.n_classes, cfg);
}

}  // namespace

std::vector<ProbeReport> probe_encoder(const EncoderCheckpoint& ckpt, const std::string& id,
                                       const std::vector<Benchmark>& benchmarks,
                                       const FrontendConfig& frontend,
                                       const ProbeConfig& cfg) {
  check_frontend(ckpt.config, frontend);
  const Encoder<float> encoder = ckpt.instantiate<float>();
  std::vector<ProbeReport> out;
  for (const auto& b : benchmarks) {
    const Split split = split_benchmark(b);
    const auto features = embed_all(benchmark_mels(b, frontend), b.records, encoder, cfg.pool_content_only);
    out.push_back({b.spec.name, id, probe_one(b, split, features, cfg)});
  }
  return out;
}

ComparisonTable compare_encoders(const EncoderCheckpoint& baseline,
                                 const std::string& baseline_id,
                                 const EncoderCheckpoint& adapted,
                                 const std::string& adapted_id,
                                 const std::vector<Benchmark>& benchmarks,
                                 const FrontendConfig& frontend, const ProbeConfig& cfg) {
  if (baseline.config.d_model != adapted.config.d_model)
    throw ComparisonError("baseline d_model " + std::to_string(baseline.config.d_model) +
                          " differs from adapted d_model " +
                          std::to_string(adapted.config.d_model));
  check_frontend(baseline.config, frontend);
  check_frontend(adapted.config, frontend);
  const Encoder<float> base_enc = baseline.instantiate<float>();
  const Encoder<float> adapt_enc = adapted.instantiate<float>();
  ComparisonTable table{baseline_id, adapted_id, {}};
  for (const auto& b : benchmarks) {
    const Split split = split_benchmark(b);
    const auto mels = benchmark_mels(b, frontend);
    ComparisonRow row;
    row.benchmark = b.spec.name;
    row.baseline = {b.spec.name, baseline_id,
                    probe_one(b, split, embed_all(mels, b.records, base_enc, cfg.pool_content_only), cfg)};
    row.adapted = {b.spec.name, adapted_id,
                   probe_one(b, split, embed_all(mels, b.records, adapt_enc, cfg.pool_content_only), cfg)};
    row.delta = 100.0 * (row.adapted.result.accuracy - row.baseline.result.accuracy);
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

json per_class_json(const ProbeResult& r) {
  json a = json::array();
  for (double v : r.per_class_accuracy) a.push_back(std::isnan(v) ? json(nullptr) : json(v));
  return a;
}

json result_json(const ProbeResult& r) {
  json j;
  j["accuracy"] = r.accuracy;
  j["per_class_accuracy"] = per_class_json(r);
  j["per_class_total"] = r.per_class_total;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["degenerate"] = r.degenerate;
  return j;
}

ProbeResult result_from_json(const json& j) {
  ProbeResult r;
  r.accuracy = j.at("accuracy").get<double>();
  for (const auto& v : j.at("per_class_accuracy"))
    r.per_class_accuracy.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                               : v.get<double>());
  r.per_class_total = j.at("per_class_total").get<std::vector<std::size_t>>();
  r.n_train = j.at("n_train").get<std::size_t>();
  r.n_test = j.at("n_test").get<std::size_t>();
  r.degenerate = j.value("degenerate", false);
  return r;
}

const Benchmark* find_benchmark(const std::vector<Benchmark>& benchmarks, const std::string& name) {
  for (const auto& b : benchmarks)
    if (b.spec.name == name) return &b;
  return nullptr;
}

// Values that round to zero print as "0.00", never "+0.00" or "-0.00".
std::string fixed2(double v, bool sign = false) {
  if (std::abs(v) < 0.005) v = 0.0;
  std::ostringstream os;
  if (sign && v != 0.0) os << std::showpos;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

}  // namespace

std::string probe_reports_json(const std::vector<ProbeReport>& reports,
                               const std::vector<Benchmark>& benchmarks) {
  json doc;
  doc["reports"] = json::array();
  for (const auto& r : reports) {
    json j;
    j["benchmark"] = r.benchmark;
    j["encoder"] = r.encoder_id;
    j["accuracy_pct"] = 100.0 * r.result.accuracy;
    j["result"] = result_json(r.result);
    if (const auto* b = find_benchmark(benchmarks, r.benchmark); b && !b->spec.class_names.empty())
      j["class_names"] = b->spec.class_names;
    doc["reports"].push_back(j);
  }
  return doc.dump(2) + "\n";
}

std::string comparison_json(const ComparisonTable& table,
                            const std::vector<Benchmark>& benchmarks) {
  json doc;
  doc["baseline_encoder"] = table.baseline_id;
  doc["adapted_encoder"] = table.adapted_id;
  doc["rows"] = json::array();
  for (const auto& row : table.rows) {
    json j;
    j["benchmark"] = row.benchmark;
    j["baseline"] = 100.0 * row.baseline.result.accuracy;
    j["adapted"] = 100.0 * row.adapted.result.accuracy;
    j["delta"] = row.delta;
    j["baseline_result"] = result_json(row.baseline.result);
    j["adapted_result"] = result_json(row.adapted.result);
    if (const auto* b = find_benchmark(benchmarks, row.benchmark); b && !b->spec.class_names.empty())
      j["class_names"] = b->spec.class_names;
    doc["rows"].push_back(j);
  }
  return doc.dump(2) + "\n";
}

ComparisonTable parse_comparison_json(const std::string& text) {
  ComparisonTable t;
  try {
    const json doc = json::parse(text);
    t.baseline_id = doc.at("baseline_encoder").get<std::string>();
    t.adapted_id = doc.at("adapted_encoder").get<std::string>();
    for (const auto& j : doc.at("rows")) {
      ComparisonRow row;
      row.benchmark = j.at("benchmark").get<std::string>();
      row.baseline = {row.benchmark, t.baseline_id, result_from_json(j.at("baseline_result"))};
      row.adapted = {row.benchmark, t.adapted_id, result_from_json(j.at("adapted_result"))};
      row.delta = j.at("delta").get<double>();
      t.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed comparison document: ") + e.what());
  }
  return t;
}

std::string render_comparison_text(const ComparisonTable& table) {
  std::size_t width = 9;
  for (const auto& r : table.rows) width = std::max(width, r.benchmark.size());
  std::ostringstream os;
  os << "Linear probe accuracy (%)\n";
  os << "baseline: " << table.baseline_id << "\n";
  os << "adapted:  " << table.adapted_id << "\n\n";
  os << std::left << std::setw(static_cast<int>(width)) << "Benchmark" << std::right
     << std::setw(11) << "Baseline" << std::setw(11) << "Adapted" << std::setw(10) << "Delta"
     << "\n";
  os << std::string(width + 32, '-') << "\n";
  for (const auto& r : table.rows)
    os << std::left << std::setw(static_cast<int>(width)) << r.benchmark << std::right
       << std::setw(11) << fixed2(100.0 * r.baseline.result.accuracy) << std::setw(11)
       << fixed2(100.0 * r.adapted.result.accuracy) << std::setw(10) << fixed2(r.delta, true)
       << "\n";
  return os.str();
}

std::string render_comparison_csv(const ComparisonTable& table) {
  std::ostringstream os;
  os << "benchmark,baseline,adapted,delta\n";
  for (const auto& r : table.rows)
    os << r.benchmark << ',' << fixed2(100.0 * r.baseline.result.accuracy) << ','
       << fixed2(100.0 * r.adapted.result.accuracy) << ',' << fixed2(r.delta, true) << "\n";
  return os.str();
}

}  // namespace audapt
