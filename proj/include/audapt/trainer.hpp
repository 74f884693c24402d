// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seq2seq captioning fine-tuning: warmup + cosine schedule, AdamW, gradient
// accumulation, per-step JSONL logging and resumable checkpoints.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "audapt/audio.hpp"
#include "audapt/data.hpp"
#include "audapt/model.hpp"
#include "audapt/optim.hpp"

namespace audapt {

struct TrainConfig {
  double peak_lr = 1e-5;
  AdamConfig adam;  // beta1 0.9, beta2 0.999, weight decay 0.01
  double warmup_frac = 0.05;
  std::size_t epochs = 2;
  std::size_t micro_batch = 8;
  std::size_t accum_steps = 2;
  std::size_t max_steps = 0;  // when non-zero, overrides epochs for the schedule length
  std::size_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::uint64_t seed = 0;
  bool domain_prefix = true;
  MixtureSpec mixture = MixtureSpec::default_mix();

  std::size_t effective_batch() const { return micro_batch * accum_steps; }
  void validate() const;
};

std::size_t warmup_steps(std::size_t total_steps, double warmup_frac);

// Linear ramp from 0 to peak over warmup_steps, then half-cosine to 0 at
// total_steps. Update k (1-based) is applied with lr_at(k).
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

// A corpus record with its mel spectrogram and decoder token sequence.
struct TrainExample {
  CorpusRecord record;
  std::vector<float> mel;  // [n_mels x 2*max_encoder_frames], row-major
  std::vector<int> tokens;
};

// Loads, resamples, pads and featurizes every record; records are expected to
// have passed filter_captions with the model's decoder limit.
std::vector<TrainExample> prepare_examples(const std::vector<CorpusRecord>& records,
                                           const FrontendConfig& frontend,
                                           const ModelConfig& model, bool domain_prefix);

// Mean next-token cross-entropy of one example under teacher forcing.
template <typename T>
Tensor<T> example_loss(const Seq2SeqModel<T>& model, const TrainExample& example);

// Mean per-example loss; never records a graph. Throws DataError when empty.
double evaluate(const Seq2SeqModel<float>& model, const std::vector<TrainExample>& examples);

struct StepRecord {
  std::size_t step = 0;
  double lr = 0;
  double train_loss = 0;
  double wall_ms = 0;
};

struct EvalRecord {
  std::size_t step = 0;
  double eval_loss = 0;
};

std::string to_jsonl(const StepRecord& r);
std::string to_jsonl(const EvalRecord& r);

class Trainer {
 public:
  // Throws DataError when `examples` is empty and MixtureError when the
  // mixture cannot be drawn from them.
  Trainer(Seq2SeqModel<float>& model, std::vector<TrainExample> examples, TrainConfig cfg);

  std::size_t step() const { return step_; }
  std::size_t total_steps() const { return total_steps_; }
  std::size_t steps_per_epoch() const { return steps_per_epoch_; }
  const TrainConfig& config() const { return cfg_; }
  const AdamState<float>& optimizer() const { return adam_; }
  const Seq2SeqModel<float>& model() const { return model_; }

  // One optimizer step over effective_batch() sampled examples, split into
  // accum_steps micro-batches.
  StepRecord train_step();

  // Writes model.ckpt, optimizer.ckpt and trainer_state.json into dir.
  void save_state(const std::filesystem::path& dir) const;
  // Restores a directory written by save_state; the model config and the
  // schedule length must match.
  void load_state(const std::filesystem::path& dir);

 private:
  Seq2SeqModel<float>& model_;
  std::vector<TrainExample> examples_;
  TrainConfig cfg_;
  std::vector<Tensor<float>> params_;
  AdamState<float> adam_;
  MixtureSampler sampler_;
  std::size_t step_ = 0;
  std::size_t steps_per_epoch_ = 0;
  std::size_t total_steps_ = 0;
};

struct TrainRunOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;  // a checkpoint directory
  std::size_t stop_at = 0;  // stop (and checkpoint) after this step; 0 runs to the end
  std::function<void(const std::string&)> progress;  // human-readable status lines
};

struct TrainRunSummary {
  std::size_t steps_run = 0;
  std::size_t final_step = 0;
  std::size_t total_steps = 0;
  bool finished = false;
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
};

// Runs the trainer, appending to <out_dir>/train_log.jsonl (truncated unless
// resuming). Evaluates once per epoch and at the last step when `eval` is
// non-empty. Checkpoints go to <out_dir>/checkpoints/step_NNNNNN. On the last
// step writes <out_dir>/model.ckpt and the extracted <out_dir>/encoder.ckpt.
TrainRunSummary run_training(Trainer& trainer, const std::vector<TrainExample>& eval,
                             const TrainRunOptions& options);

std::filesystem::path checkpoint_dir(const std::filesystem::path& out_dir, std::size_t step);

}  // namespace audapt
