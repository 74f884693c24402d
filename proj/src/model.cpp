// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "audapt/model.hpp"

#include <cmath>
#include <random>

#include "audapt/error.hpp"

namespace audapt {

void EncoderConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0)
    throw ConfigError("d_model must be a positive multiple of n_heads");
  if (n_layers == 0) throw ConfigError("encoder needs at least one layer");
  if (max_frames == 0) throw ConfigError("max_encoder_frames must be positive");
  if (n_mels == 0) throw ConfigError("n_mels must be positive");
}

void ModelConfig::validate() const {
  encoder().validate();
  if (n_dec_layers == 0) throw ConfigError("decoder needs at least one layer");
  if (vocab_size == 0) throw ConfigError("vocab_size must be positive");
  if (max_decoder_len == 0) throw ConfigError("max_decoder_len must be positive");
}

ModelConfig ModelConfig::whisper_large_v3() {
  ModelConfig c;
  c.d_model = 1280;
  c.n_heads = 20;
  c.n_enc_layers = 32;
  c.n_dec_layers = 32;
  c.vocab_size = 51866;
  return c;
}

std::vector<double> sinusoid_positions(std::size_t frames, std::size_t d_model) {
  const std::size_t half = d_model / 2;
  const double increment = half > 1 ? std::log(10000.0) / double(half - 1) : 0.0;
  std::vector<double> table(frames * d_model, 0.0);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t i = 0; i < half; ++i) {
      const double angle = double(t) * std::exp(-increment * double(i));
      table[t * d_model + i] = std::sin(angle);
      table[t * d_model + half + i] = std::cos(angle);
    }
  return table;
}

template <typename T>
Tensor<T> Linear<T>::operator()(const Tensor<T>& x) const {
  Tensor<T> y = matmul(x, weight);
  return bias.defined() ? add(y, bias) : y;
}

template <typename T>
Tensor<T> LayerNorm<T>::operator()(const Tensor<T>& x) const {
  return add(mul(layer_norm(x, static_cast<T>(kLayerNormEps)), gain), bias);
}

template <typename T>
Tensor<T> Attention<T>::operator()(const Tensor<T>& query_in,
                                   const Tensor<T>& kv_in, bool causal) const {
  const Tensor<T> q = query(query_in);
  const Tensor<T> k = key(kv_in);
  const Tensor<T> v = value(kv_in);
  const std::size_t d = q.dim(1);
  const std::size_t dh = d / n_heads;
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  std::vector<Tensor<T>> heads;
  heads.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const Tensor<T> qh = n_heads == 1 ? q : slice(q, 1, h * dh, (h + 1) * dh);
    const Tensor<T> kh = n_heads == 1 ? k : slice(k, 1, h * dh, (h + 1) * dh);
    const Tensor<T> vh = n_heads == 1 ? v : slice(v, 1, h * dh, (h + 1) * dh);
    Tensor<T> scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    if (causal) scores = causal_mask(scores);
    heads.push_back(matmul(softmax(scores, 1), vh));
  }
  return out(n_heads == 1 ? heads[0] : concat(heads, 1));
}

namespace {

template <typename T>
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Tensor<T> normal(Shape shape) {
    std::normal_distribution<double> dist(0.0, kInitStd);
    std::vector<T> v(shape_numel(shape));
    for (auto& x : v) x = static_cast<T>(dist(rng_));
    return Tensor<T>::from(std::move(shape), std::move(v), true);
  }
  Tensor<T> zeros(Shape shape) { return Tensor<T>::zeros(std::move(shape), true); }
  Tensor<T> ones(Shape shape) { return Tensor<T>::full(std::move(shape), T(1), true); }

  Linear<T> linear(std::size_t in, std::size_t out, bool with_bias = true) {
    Linear<T> l;
    l.weight = normal({in, out});
    if (with_bias) l.bias = zeros({out});
    return l;
  }
  LayerNorm<T> layer_norm(std::size_t d) { return {ones({d}), zeros({d})}; }
  Attention<T> attention(std::size_t d, std::size_t heads) {
    Attention<T> a;
    a.query = linear(d, d);
    a.key = linear(d, d, false);
    a.value = linear(d, d);
    a.out = linear(d, d);
    a.n_heads = heads;
    return a;
  }
  Mlp<T> mlp(std::size_t d) { return {linear(d, 4 * d), linear(4 * d, d)}; }

 private:
  std::mt19937_64 rng_;
};

template <typename T>
void push_linear(std::vector<NamedTensor<T>>& out, const std::string& prefix,
                 const Linear<T>& l) {
  out.push_back({prefix + ".weight", l.weight});
  if (l.bias.defined()) out.push_back({prefix + ".bias", l.bias});
}

template <typename T>
void push_ln(std::vector<NamedTensor<T>>& out, const std::string& prefix,
             const LayerNorm<T>& ln) {
  out.push_back({prefix + ".gain", ln.gain});
  out.push_back({prefix + ".bias", ln.bias});
}

template <typename T>
void push_attention(std::vector<NamedTensor<T>>& out, const std::string& prefix,
                    const Attention<T>& a) {
  push_linear(out, prefix + ".query", a.query);
  push_linear(out, prefix + ".key", a.key);
  push_linear(out, prefix + ".value", a.value);
  push_linear(out, prefix + ".out", a.out);
}

template <typename T>
void push_mlp(std::vector<NamedTensor<T>>& out, const std::string& prefix,
              const Mlp<T>& m) {
  push_linear(out, prefix + ".fc1", m.fc1);
  push_linear(out, prefix + ".fc2", m.fc2);
}

template <typename T>
std::size_t count(const std::vector<NamedTensor<T>>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

}  // namespace

template <typename T>
Encoder<T>::Encoder(const EncoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Initializer<T> init(seed);
  const std::size_t d = cfg.d_model;
  conv1 = init.linear(3 * cfg.n_mels, d);
  conv2 = init.linear(3 * d, d);
  for (std::size_t l = 0; l < cfg.n_layers; ++l)
    blocks.push_back({init.layer_norm(d), init.attention(d, cfg.n_heads),
                      init.layer_norm(d), init.mlp(d)});
  ln_post = init.layer_norm(d);
  const auto table = sinusoid_positions(cfg.max_frames, d);
  positions_ = Tensor<T>::from({cfg.max_frames, d},
                               std::vector<T>(table.begin(), table.end()));
}

template <typename T>
Tensor<T> Encoder<T>::encode(const Tensor<T>& mel) const {
  if (mel.rank() != 2 || mel.dim(0) != cfg_.n_mels ||
      mel.dim(1) != 2 * cfg_.max_frames)
    throw ShapeError("encoder expects mel " +
                     shape_str({cfg_.n_mels, 2 * cfg_.max_frames}) + ", got " +
                     shape_str(mel.shape()));
  const Tensor<T> frames = transpose(mel);  // [time x n_mels]
  Tensor<T> x = gelu(conv1d(frames, conv1.weight, conv1.bias, 3, 1, 1));
  x = gelu(conv1d(x, conv2.weight, conv2.bias, 3, 2, 1));
  x = add(x, positions_);
  for (const auto& b : blocks) {
    const Tensor<T> h = b.attn_ln(x);
    x = add(x, b.attn(h, h, false));
    x = add(x, b.mlp(b.mlp_ln(x)));
  }
  return ln_post(x);
}

template <typename T>
Tensor<T> Encoder<T>::encode(const MelSpectrogram& mel) const {
  return encode(Tensor<T>::from({mel.n_mels, mel.n_frames},
                                std::vector<T>(mel.values.begin(), mel.values.end())));
}

template <typename T>
std::vector<NamedTensor<T>> Encoder<T>::named_parameters() const {
  std::vector<NamedTensor<T>> out;
  push_linear(out, "conv1", conv1);
  push_linear(out, "conv2", conv2);
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const std::string p = "blocks." + std::to_string(l);
    push_ln(out, p + ".attn_ln", blocks[l].attn_ln);
    push_attention(out, p + ".attn", blocks[l].attn);
    push_ln(out, p + ".mlp_ln", blocks[l].mlp_ln);
    push_mlp(out, p + ".mlp", blocks[l].mlp);
  }
  push_ln(out, "ln_post", ln_post);
  return out;
}

template <typename T>
std::size_t Encoder<T>::parameter_count() const {
  return count(named_parameters());
}

template <typename T>
Decoder<T>::Decoder(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  Initializer<T> init(seed);
  const std::size_t d = cfg.d_model;
  token_embedding = init.normal({cfg.vocab_size, d});
  position_embedding = init.normal({cfg.max_decoder_len, d});
  for (std::size_t l = 0; l < cfg.n_dec_layers; ++l)
    blocks.push_back({init.layer_norm(d), init.attention(d, cfg.n_heads),
                      init.layer_norm(d), init.attention(d, cfg.n_heads),
                      init.layer_norm(d), init.mlp(d)});
  ln_post = init.layer_norm(d);
}

template <typename T>
Tensor<T> Decoder<T>::decode(const Tensor<T>& hidden,
                             std::span<const int> tokens) const {
  if (tokens.empty() || tokens.size() > cfg_.max_decoder_len)
    throw LengthError("decoder input of " + std::to_string(tokens.size()) +
                      " tokens, limit " + std::to_string(cfg_.max_decoder_len));
  if (hidden.rank() != 2 || hidden.dim(1) != cfg_.d_model)
    throw ShapeError("decoder expects hidden states [* x " +
                     std::to_string(cfg_.d_model) + "], got " +
                     shape_str(hidden.shape()));
  Tensor<T> x = add(embedding_lookup(token_embedding, tokens),
                    slice(position_embedding, 0, 0, tokens.size()));
  for (const auto& b : blocks) {
    const Tensor<T> h = b.self_ln(x);
    x = add(x, b.self_attn(h, h, true));
    x = add(x, b.cross_attn(b.cross_ln(x), hidden, false));
    x = add(x, b.mlp(b.mlp_ln(x)));
  }
  return matmul(ln_post(x), transpose(token_embedding));
}

template <typename T>
std::vector<NamedTensor<T>> Decoder<T>::named_parameters() const {
  std::vector<NamedTensor<T>> out;
  out.push_back({"token_embedding", token_embedding});
  out.push_back({"position_embedding", position_embedding});
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const std::string p = "blocks." + std::to_string(l);
    push_ln(out, p + ".self_ln", blocks[l].self_ln);
    push_attention(out, p + ".self_attn", blocks[l].self_attn);
    push_ln(out, p + ".cross_ln", blocks[l].cross_ln);
    push_attention(out, p + ".cross_attn", blocks[l].cross_attn);
    push_ln(out, p + ".mlp_ln", blocks[l].mlp_ln);
    push_mlp(out, p + ".mlp", blocks[l].mlp);
  }
  push_ln(out, "ln_post", ln_post);
  return out;
}

template <typename T>
std::size_t Decoder<T>::parameter_count() const {
  return count(named_parameters());
}

// Encoder and decoder draw from independent streams so that decoder size
// never perturbs encoder initialization.
template <typename T>
Seq2SeqModel<T>::Seq2SeqModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      encoder_(cfg.encoder(), seed * 2 + 1),
      decoder_(cfg, seed * 2 + 2) {}

template <typename T>
Tensor<T> Seq2SeqModel<T>::decode_teacher_forced(
    const Tensor<T>& hidden, std::span<const int> tokens) const {
  return decoder_.decode(hidden, tokens);
}

template <typename T>
std::vector<NamedTensor<T>> Seq2SeqModel<T>::named_parameters() const {
  std::vector<NamedTensor<T>> out;
  for (auto& p : encoder_.named_parameters())
    out.push_back({"encoder." + p.name, p.tensor});
  for (auto& p : decoder_.named_parameters())
    out.push_back({"decoder." + p.name, p.tensor});
  return out;
}

template <typename T>
std::size_t Seq2SeqModel<T>::parameter_count() const {
  return encoder_.parameter_count() + decoder_.parameter_count();
}

template <typename T>
Tensor<T> avg_pool_2x(const Tensor<T>& hidden) {
  if (hidden.rank() != 2 || hidden.dim(0) < 2)
    throw ShapeError("avg_pool_2x needs at least two frames, got " +
                     shape_str(hidden.shape()));
  const std::size_t out_frames = hidden.dim(0) / 2;
  const Tensor<T> even = hidden.dim(0) % 2 ? slice(hidden, 0, 0, 2 * out_frames)
                                           : hidden;
  const Tensor<T> pairs = reshape(even, {out_frames, 2 * hidden.dim(1)});
  const std::size_t d = hidden.dim(1);
  return scale(add(slice(pairs, 1, 0, d), slice(pairs, 1, d, 2 * d)), T(0.5));
}

template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct Attention<float>;
template struct Attention<double>;
template class Encoder<float>;
template class Encoder<double>;
template class Decoder<float>;
template class Decoder<double>;
template class Seq2SeqModel<float>;
template class Seq2SeqModel<double>;
template Tensor<float> avg_pool_2x(const Tensor<float>&);
template Tensor<double> avg_pool_2x(const Tensor<double>&);

}  // namespace audapt
