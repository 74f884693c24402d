// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Whisper-shaped encoder-decoder transformer.
//
// The encoder (conv stem, sinusoidal positions, pre-norm self-attention
// blocks, final layer norm) is the artifact that survives training. The
// decoder (token + learned position embeddings, causal self-attention,
// cross-attention, tied output projection) only exists to push a captioning
// gradient into the encoder and is dropped by extract_encoder().

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "audapt/audio.hpp"
#include "audapt/tensor.hpp"

namespace audapt {

struct EncoderConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 4;
  std::size_t max_frames = 1500;  // encoder frames; the mel input has twice as many
  std::size_t n_mels = 128;

  bool operator==(const EncoderConfig&) const = default;
  void validate() const;
};

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_enc_layers = 4;
  std::size_t n_dec_layers = 2;
  std::size_t vocab_size = 262;
  std::size_t max_decoder_len = 448;
  std::size_t max_encoder_frames = 1500;
  std::size_t n_mels = 128;

  bool operator==(const ModelConfig&) const = default;
  void validate() const;
  EncoderConfig encoder() const {
    return {d_model, n_heads, n_enc_layers, max_encoder_frames, n_mels};
  }

  // Reference shape of the large production model; documented only, far too
  // large to instantiate here.
  static ModelConfig whisper_large_v3();
};

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kInitStd = 0.02;

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in x out]
  Tensor<T> bias;    // [out], undefined when the projection has no bias
  Tensor<T> operator()(const Tensor<T>& x) const;
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain;
  Tensor<T> bias;
  Tensor<T> operator()(const Tensor<T>& x) const;
};

template <typename T>
struct Attention {
  Linear<T> query, key, value, out;  // key has no bias
  std::size_t n_heads = 1;
  // query_in: [Tq x d]; kv_in: [Tk x d]. Causal masking requires Tq == Tk.
  Tensor<T> operator()(const Tensor<T>& query_in, const Tensor<T>& kv_in,
                       bool causal) const;
};

template <typename T>
struct Mlp {
  Linear<T> fc1, fc2;
  Tensor<T> operator()(const Tensor<T>& x) const { return fc2(gelu(fc1(x))); }
};

template <typename T>
struct EncoderBlock {
  LayerNorm<T> attn_ln;
  Attention<T> attn;
  LayerNorm<T> mlp_ln;
  Mlp<T> mlp;
};

template <typename T>
struct DecoderBlock {
  LayerNorm<T> self_ln;
  Attention<T> self_attn;
  LayerNorm<T> cross_ln;
  Attention<T> cross_attn;
  LayerNorm<T> mlp_ln;
  Mlp<T> mlp;
};

// Whisper's fixed sinusoidal table, [frames x d_model].
std::vector<double> sinusoid_positions(std::size_t frames, std::size_t d_model);

template <typename T>
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, std::uint64_t seed);

  // mel: [n_mels x 2*max_frames] -> hidden states [max_frames x d_model].
  Tensor<T> encode(const Tensor<T>& mel) const;
  Tensor<T> encode(const MelSpectrogram& mel) const;

  const EncoderConfig& config() const { return cfg_; }
  std::vector<NamedTensor<T>> named_parameters() const;
  std::size_t parameter_count() const;

  // Exposed so tests can hand-set weights.
  Linear<T> conv1, conv2;  // weights [3*in x out]
  std::vector<EncoderBlock<T>> blocks;
  LayerNorm<T> ln_post;

 private:
  EncoderConfig cfg_;
  Tensor<T> positions_;
};

template <typename T>
class Decoder {
 public:
  Decoder(const ModelConfig& cfg, std::uint64_t seed);

  // tokens: decoder input ids, BOS first. Row t of the result scores the
  // token that follows tokens[t] and depends only on tokens[0..t] and the
  // encoder states.
  Tensor<T> decode(const Tensor<T>& hidden, std::span<const int> tokens) const;

  std::vector<NamedTensor<T>> named_parameters() const;
  std::size_t parameter_count() const;

  Tensor<T> token_embedding;     // [vocab x d], tied to the output projection
  Tensor<T> position_embedding;  // [max_decoder_len x d]
  std::vector<DecoderBlock<T>> blocks;
  LayerNorm<T> ln_post;

 private:
  ModelConfig cfg_;
};

template <typename T>
class Seq2SeqModel {
 public:
  explicit Seq2SeqModel(const ModelConfig& cfg, std::uint64_t seed = 0);

  Tensor<T> encode(const Tensor<T>& mel) const { return encoder_.encode(mel); }
  Tensor<T> encode(const MelSpectrogram& mel) const { return encoder_.encode(mel); }
  // Throws LengthError when tokens is empty or longer than max_decoder_len.
  Tensor<T> decode_teacher_forced(const Tensor<T>& hidden,
                                  std::span<const int> tokens) const;

  const ModelConfig& config() const { return cfg_; }
  Encoder<T>& encoder() { return encoder_; }
  const Encoder<T>& encoder() const { return encoder_; }
  Decoder<T>& decoder() { return decoder_; }
  const Decoder<T>& decoder() const { return decoder_; }

  // Encoder parameters ("encoder." prefix) followed by decoder parameters.
  std::vector<NamedTensor<T>> named_parameters() const;
  std::size_t parameter_count() const;

 private:
  ModelConfig cfg_;
  Encoder<T> encoder_;
  Decoder<T> decoder_;
};

// Mean of frames 2i and 2i+1; an odd trailing frame is dropped.
template <typename T>
Tensor<T> avg_pool_2x(const Tensor<T>& hidden);

// ---------------------------------------------------------------------------
// Checkpoints

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

enum class CheckpointKind : std::uint32_t {
  kFullModel = 1,
  kEncoderOnly = 2,
  kOptimizerState = 3,
};

// In-memory image of a checkpoint file: a config block of named integers in
// fixed order followed by float32 arrays.
struct Archive {
  CheckpointKind kind = CheckpointKind::kFullModel;
  std::vector<std::pair<std::string, std::uint64_t>> config;
  std::vector<NamedArray> arrays;
};

inline constexpr char kCheckpointMagic[8] = {'A', 'U', 'D', 'A', 'P', 'T', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> serialize_archive(const Archive& archive);
// Validates magic, version, structure and the SHA-256 trailer.
Archive deserialize_archive(std::span<const unsigned char> bytes);
void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);
std::string sha256_hex(std::span<const unsigned char> bytes);
// SHA-256 of a file's full contents.
std::string file_sha256(const std::filesystem::path& path);

struct EncoderCheckpoint {
  EncoderConfig config;
  std::vector<NamedArray> parameters;

  std::size_t parameter_count() const;
  // Builds an encoder and copies the stored weights in. Throws
  // CheckpointError if names or shapes disagree with the config.
  template <typename T>
  Encoder<T> instantiate() const;
};

// Copies the encoder weights out of a model; no decoder tensor is retained.
template <typename T>
EncoderCheckpoint extract_encoder(const Seq2SeqModel<T>& model);

void save_encoder(const std::filesystem::path& path, const EncoderCheckpoint& ckpt);
EncoderCheckpoint load_encoder(const std::filesystem::path& path);
// Loads and additionally requires the stored config to equal `expected`.
EncoderCheckpoint load_encoder(const std::filesystem::path& path,
                               const EncoderConfig& expected);

template <typename T>
void save_model(const std::filesystem::path& path, const Seq2SeqModel<T>& model);
// Loads weights into `model`; throws CheckpointError on config mismatch.
template <typename T>
void load_model(const std::filesystem::path& path, Seq2SeqModel<T>& model);
ModelConfig read_model_config(const std::filesystem::path& path);

}  // namespace audapt
