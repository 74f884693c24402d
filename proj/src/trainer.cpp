// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "audapt/trainer.hpp"

#include <chrono>
#include <exception>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "audapt/error.hpp"

namespace audapt {

using json = nlohmann::ordered_json;

void TrainConfig::validate() const {
  if (!(peak_lr > 0) || !std::isfinite(peak_lr)) throw ConfigError("peak_lr must be positive");
  if (!(warmup_frac > 0 && warmup_frac < 1)) throw ConfigError("warmup_frac must lie in (0, 1)");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(adam.eps > 0)) throw ConfigError("Adam eps must be positive");
  if (!(adam.weight_decay >= 0)) throw ConfigError("weight_decay must be non-negative");
  if (micro_batch == 0 || accum_steps == 0)
    throw ConfigError("micro_batch and accum_steps must be positive");
  if (epochs == 0 && max_steps == 0) throw ConfigError("need epochs > 0 or max_steps > 0");
  double total = 0;
  for (double w : mixture.weights) {
    if (!(w >= 0)) throw ConfigError("mixture weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
}

std::size_t warmup_steps(std::size_t total_steps, double warmup_frac) {
  return static_cast<std::size_t>(std::ceil(warmup_frac * static_cast<double>(total_steps)));
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  if (total_steps == 0) throw ConfigError("total_steps must be positive");
  if (step > total_steps) throw ConfigError("step beyond the schedule");
  const std::size_t warm = warmup_steps(total_steps, cfg.warmup_frac);
  if (step <= warm) {
    if (step == warm) return cfg.peak_lr;
    return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(warm);
  }
  const double progress =
      static_cast<double>(step - warm) / static_cast<double>(total_steps - warm);
  return cfg.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::vector<TrainExample> prepare_examples(const std::vector<CorpusRecord>& records,
                                           const FrontendConfig& frontend,
                                           const ModelConfig& model, bool domain_prefix) {
  frontend.validate();
  if (frontend.n_frames() != 2 * model.max_encoder_frames || frontend.n_mels != model.n_mels)
    throw ConfigError("frontend produces " + std::to_string(frontend.n_mels) + "x" +
                      std::to_string(frontend.n_frames()) + " mels but the model expects " +
                      std::to_string(model.n_mels) + "x" +
                      std::to_string(2 * model.max_encoder_frames));
  std::vector<TrainExample> out(records.size());
  std::vector<std::exception_ptr> errors(records.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      out[i].record = records[i];
      out[i].mel = mel_from_file(records[i].audio_path, frontend).values;
      out[i].tokens = training_sequence(records[i], domain_prefix);
      if (out[i].tokens.size() - 1 > model.max_decoder_len)
        throw LengthError(records[i].audio_path + ": caption exceeds the decoder limit");
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  // First failure in manifest order, so the message does not depend on scheduling.
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

template <typename T>
Tensor<T> example_loss(const Seq2SeqModel<T>& model, const TrainExample& ex) {
  const auto& cfg = model.config();
  const Tensor<T> mel = Tensor<T>::from({cfg.n_mels, 2 * cfg.max_encoder_frames},
                                        std::vector<T>(ex.mel.begin(), ex.mel.end()));
  if (ex.tokens.size() < 2) throw DataError("token sequence shorter than two");
  const std::span<const int> ids(ex.tokens);
  const Tensor<T> logits =
      model.decode_teacher_forced(model.encode(mel), ids.first(ids.size() - 1));
  return cross_entropy(logits, ids.subspan(1));
}

template Tensor<float> example_loss(const Seq2SeqModel<float>&, const TrainExample&);
template Tensor<double> example_loss(const Seq2SeqModel<double>&, const TrainExample&);

double evaluate(const Seq2SeqModel<float>& model, const std::vector<TrainExample>& examples) {
  if (examples.empty()) throw DataError("empty evaluation set");
  NoGradGuard guard;
  double total = 0;
  for (const auto& ex : examples) total += example_loss(model, ex).item();
  return total / static_cast<double>(examples.size());
}

namespace {

std::string brief(double v) {
  std::ostringstream os;
  os << std::setprecision(5) << v;
  return os.str();
}

std::vector<CorpusRecord> records_of(const std::vector<TrainExample>& examples) {
  if (examples.empty()) throw DataError("no training examples after caption filtering");
  std::vector<CorpusRecord> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.record);
  return out;
}

}  // namespace

std::string to_jsonl(const StepRecord& r) {
  json j;
  j["step"] = r.step;
  j["lr"] = r.lr;
  j["train_loss"] = r.train_loss;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

std::string to_jsonl(const EvalRecord& r) {
  json j;
  j["step"] = r.step;
  j["eval_loss"] = r.eval_loss;
  return j.dump();
}

Trainer::Trainer(Seq2SeqModel<float>& model, std::vector<TrainExample> examples,
                 TrainConfig cfg)
    : model_(model),
      examples_(std::move(examples)),
      cfg_((cfg.validate(), cfg)),
      sampler_(records_of(examples_), cfg.mixture, cfg.seed) {
  for (auto& p : model_.named_parameters()) params_.push_back(p.tensor);
  adam_.init(params_);
  const std::size_t eff = cfg_.effective_batch();
  steps_per_epoch_ = (examples_.size() + eff - 1) / eff;
  total_steps_ = cfg_.max_steps > 0 ? cfg_.max_steps : cfg_.epochs * steps_per_epoch_;
}

StepRecord Trainer::train_step() {
  if (step_ >= total_steps_) throw ConfigError("training schedule already complete");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t eff = cfg_.effective_batch();
  const std::vector<std::size_t> picks = sampler_.next_batch(eff);
  for (auto& p : params_) p.zero_grad();

  // Each example contributes loss / effective_batch, so the accumulated
  // gradient is the mean over the effective batch for any micro-batch split.
  const float weight = 1.0f / static_cast<float>(eff);
  double loss_sum = 0;
  for (std::size_t micro = 0; micro < cfg_.accum_steps; ++micro) {
    for (std::size_t i = 0; i < cfg_.micro_batch; ++i) {
      const TrainExample& ex = examples_[picks[micro * cfg_.micro_batch + i]];
      const Tensor<float> loss = example_loss(model_, ex);
      loss_sum += loss.item();
      backward(scale(loss, weight));
    }
  }
  const double lr = lr_at(step_ + 1, total_steps_, cfg_);
  adamw_step(params_, adam_, lr, cfg_.adam);
  for (auto& p : params_) p.zero_grad();
  ++step_;

  StepRecord rec;
  rec.step = step_;
  rec.lr = lr;
  rec.train_loss = loss_sum / static_cast<double>(eff);
  if (!std::isfinite(rec.train_loss)) throw NumericalError("training loss is not finite");
  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return rec;
}

void Trainer::save_state(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IOError("cannot create " + dir.string() + ": " + ec.message());
  save_model(dir / "model.ckpt", model_);

  Archive opt;
  opt.kind = CheckpointKind::kOptimizerState;
  opt.config = {{"adam_t", adam_.t}, {"step", step_}, {"total_steps", total_steps_}};
  const auto named = model_.named_parameters();
  for (std::size_t i = 0; i < named.size(); ++i) {
    opt.arrays.push_back({"m." + named[i].name, named[i].tensor.shape(), adam_.m[i]});
    opt.arrays.push_back({"v." + named[i].name, named[i].tensor.shape(), adam_.v[i]});
  }
  write_archive(dir / "optimizer.ckpt", opt);

  json state;
  state["step"] = step_;
  state["total_steps"] = total_steps_;
  state["seed"] = cfg_.seed;
  state["sampler_state"] = sampler_.save_state();
  std::ofstream os(dir / "trainer_state.json", std::ios::trunc);
  os << state.dump(2) << '\n';
  if (!os) throw IOError("cannot write " + (dir / "trainer_state.json").string());
}

void Trainer::load_state(const std::filesystem::path& dir) {
  const auto state_path = dir / "trainer_state.json";
  std::ifstream in(state_path);
  if (!in) throw IOError("cannot open " + state_path.string());
  json state;
  try {
    state = json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointError(state_path.string() + ": " + e.what());
  }
  if (state.value("total_steps", std::size_t{0}) != total_steps_)
    throw ConfigError("checkpoint schedule has " +
                      std::to_string(state.value("total_steps", std::size_t{0})) +
                      " steps, this run has " + std::to_string(total_steps_));
  load_model(dir / "model.ckpt", model_);

  const Archive opt = read_archive(dir / "optimizer.ckpt");
  if (opt.kind != CheckpointKind::kOptimizerState)
    throw CheckpointError((dir / "optimizer.ckpt").string() + " is not optimizer state");
  const auto named = model_.named_parameters();
  if (opt.arrays.size() != 2 * named.size())
    throw CheckpointError("optimizer state does not match the model");
  for (std::size_t i = 0; i < named.size(); ++i) {
    const NamedArray& m = opt.arrays[2 * i];
    const NamedArray& v = opt.arrays[2 * i + 1];
    if (m.name != "m." + named[i].name || v.name != "v." + named[i].name ||
        m.shape != named[i].tensor.shape() || v.shape != named[i].tensor.shape())
      throw CheckpointError("optimizer moment for " + named[i].name + " does not match");
    adam_.m[i] = m.values;
    adam_.v[i] = v.values;
  }
  adam_.t = 0;
  for (const auto& [key, value] : opt.config)
    if (key == "adam_t") adam_.t = value;
  step_ = state.at("step").get<std::size_t>();
  sampler_.restore_state(state.at("sampler_state").get<std::string>());
}

std::filesystem::path checkpoint_dir(const std::filesystem::path& out_dir, std::size_t step) {
  std::ostringstream name;
  name << "step_" << std::setw(6) << std::setfill('0') << step;
  return out_dir / "checkpoints" / name.str();
}

TrainRunSummary run_training(Trainer& trainer, const std::vector<TrainExample>& eval,
                             const TrainRunOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec) throw IOError("cannot create " + options.out_dir.string() + ": " + ec.message());
  if (options.resume_from) trainer.load_state(*options.resume_from);

  const auto log_path = options.out_dir / "train_log.jsonl";
  std::ofstream log(log_path, options.resume_from ? std::ios::app : std::ios::trunc);
  if (!log) throw IOError("cannot open " + log_path.string());
  auto say = [&](const std::string& s) {
    if (options.progress) options.progress(s);
  };

  TrainRunSummary summary;
  summary.total_steps = trainer.total_steps();
  const std::size_t stop = options.stop_at > 0
                               ? std::min(options.stop_at, trainer.total_steps())
                               : trainer.total_steps();
  const std::size_t every = trainer.config().checkpoint_every;
  while (trainer.step() < stop) {
    const StepRecord rec = trainer.train_step();
    summary.steps.push_back(rec);
    log << to_jsonl(rec) << '\n';
    const bool last = trainer.step() == trainer.total_steps();
    const bool epoch_end = trainer.step() % trainer.steps_per_epoch() == 0;
    if (!eval.empty() && (epoch_end || last)) {
      const EvalRecord er{trainer.step(), evaluate(trainer.model(), eval)};
      summary.evals.push_back(er);
      log << to_jsonl(er) << '\n';
      say("step " + std::to_string(er.step) + " eval_loss " + brief(er.eval_loss));
    }
    log.flush();
    if (!log) throw IOError("short write to " + log_path.string());
    if (rec.step % 25 == 0 || rec.step == 1)
      say("step " + std::to_string(rec.step) + "/" + std::to_string(trainer.total_steps()) +
          " lr " + brief(rec.lr) + " loss " + brief(rec.train_loss));
    if ((every > 0 && trainer.step() % every == 0) || trainer.step() == stop)
      trainer.save_state(checkpoint_dir(options.out_dir, trainer.step()));
  }
  if (trainer.step() == trainer.total_steps()) {
    save_model(options.out_dir / "model.ckpt", trainer.model());
    save_encoder(options.out_dir / "encoder.ckpt", extract_encoder(trainer.model()));
  }
  summary.steps_run = summary.steps.size();
  summary.final_step = trainer.step();
  summary.finished = trainer.step() == trainer.total_steps();
  return summary;
}

}  // namespace audapt
