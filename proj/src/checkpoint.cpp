// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint layout (all integers little-endian):
//
//   magic "AUDAPTCK"            8 bytes
//   format version              u32
//   kind                        u32 (CheckpointKind)
//   config entry count          u32
//     key length, key bytes     u32, bytes
//     value                     u64
//   array count                 u32
//     name length, name bytes   u32, bytes
//     rank, dims                u32, u64 * rank
//     payload                   float32 * prod(dims)
//   SHA-256 of all of the above 32 bytes

#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <iterator>

#include "audapt/error.hpp"
#include "audapt/model.hpp"

namespace audapt {
namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    u32(u);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<unsigned char>& bytes() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> b) : b_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b_[pos_++]) << (8 * i);
    return v;
  }
  float f32() {
    const std::uint32_t u = u32();
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void expect(const void* p, std::size_t n, const char* what) {
    need(n);
    if (std::memcmp(b_.data() + pos_, p, n) != 0)
      throw CheckpointError(std::string("bad ") + what);
    pos_ += n;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw CheckpointError("truncated checkpoint");
  }
  std::span<const unsigned char> b_;
  std::size_t pos_ = 0;
};

std::array<unsigned char, SHA256_DIGEST_LENGTH> digest(
    std::span<const unsigned char> bytes) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> out{};
  SHA256(bytes.data(), bytes.size(), out.data());
  return out;
}

std::uint64_t config_value(const Archive& a, const std::string& key) {
  for (const auto& [k, v] : a.config)
    if (k == key) return v;
  throw CheckpointError("config key '" + key + "' missing");
}

std::vector<std::pair<std::string, std::uint64_t>> encoder_config_block(
    const EncoderConfig& c) {
  return {{"d_model", c.d_model},
          {"n_heads", c.n_heads},
          {"n_enc_layers", c.n_layers},
          {"max_encoder_frames", c.max_frames},
          {"n_mels", c.n_mels}};
}

EncoderConfig encoder_config_from(const Archive& a) {
  EncoderConfig c;
  c.d_model = config_value(a, "d_model");
  c.n_heads = config_value(a, "n_heads");
  c.n_layers = config_value(a, "n_enc_layers");
  c.max_frames = config_value(a, "max_encoder_frames");
  c.n_mels = config_value(a, "n_mels");
  return c;
}

std::vector<std::pair<std::string, std::uint64_t>> model_config_block(
    const ModelConfig& c) {
  return {{"d_model", c.d_model},
          {"n_heads", c.n_heads},
          {"n_enc_layers", c.n_enc_layers},
          {"n_dec_layers", c.n_dec_layers},
          {"vocab_size", c.vocab_size},
          {"max_decoder_len", c.max_decoder_len},
          {"max_encoder_frames", c.max_encoder_frames},
          {"n_mels", c.n_mels}};
}

ModelConfig model_config_from(const Archive& a) {
  ModelConfig c;
  c.d_model = config_value(a, "d_model");
  c.n_heads = config_value(a, "n_heads");
  c.n_enc_layers = config_value(a, "n_enc_layers");
  c.n_dec_layers = config_value(a, "n_dec_layers");
  c.vocab_size = config_value(a, "vocab_size");
  c.max_decoder_len = config_value(a, "max_decoder_len");
  c.max_encoder_frames = config_value(a, "max_encoder_frames");
  c.n_mels = config_value(a, "n_mels");
  return c;
}

template <typename T>
NamedArray to_array(const std::string& name, const Tensor<T>& t) {
  return {name, t.shape(), std::vector<float>(t.data().begin(), t.data().end())};
}

template <typename T>
void copy_into(const std::vector<NamedTensor<T>>& targets,
               const std::vector<NamedArray>& arrays) {
  if (arrays.size() != targets.size())
    throw CheckpointError("checkpoint holds " + std::to_string(arrays.size()) +
                          " tensors, model expects " +
                          std::to_string(targets.size()));
  for (auto target : targets) {
    const auto it = std::find_if(arrays.begin(), arrays.end(), [&](const NamedArray& a) {
      return a.name == target.name;
    });
    if (it == arrays.end()) throw CheckpointError("tensor '" + target.name + "' missing");
    if (it->shape != target.tensor.shape())
      throw CheckpointError("tensor '" + target.name + "' has shape " +
                            shape_str(it->shape) + ", model expects " +
                            shape_str(target.tensor.shape()));
    auto dst = target.tensor.mutable_data();
    std::copy(it->values.begin(), it->values.end(), dst.begin());
  }
}

}  // namespace

std::vector<unsigned char> serialize_archive(const Archive& archive) {
  Writer w;
  w.raw(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(archive.kind));
  w.u32(static_cast<std::uint32_t>(archive.config.size()));
  for (const auto& [k, v] : archive.config) {
    w.str(k);
    w.u64(v);
  }
  w.u32(static_cast<std::uint32_t>(archive.arrays.size()));
  for (const auto& a : archive.arrays) {
    if (shape_numel(a.shape) != a.values.size())
      throw CheckpointError("array '" + a.name + "' does not fill its shape");
    w.str(a.name);
    w.u32(static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) w.u64(d);
    for (float f : a.values) w.f32(f);
  }
  const auto hash = digest(w.bytes());
  w.raw(hash.data(), hash.size());
  return std::move(w.bytes());
}

Archive deserialize_archive(std::span<const unsigned char> bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) + SHA256_DIGEST_LENGTH)
    throw CheckpointError("file too short");
  const auto body = bytes.first(bytes.size() - SHA256_DIGEST_LENGTH);
  const auto hash = digest(body);
  if (!std::equal(hash.begin(), hash.end(), bytes.end() - SHA256_DIGEST_LENGTH))
    throw CheckpointError("content hash mismatch");

  Reader r(body);
  r.expect(kCheckpointMagic, sizeof(kCheckpointMagic), "magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported format version " + std::to_string(version));
  Archive a;
  a.kind = static_cast<CheckpointKind>(r.u32());
  const std::uint32_t n_cfg = r.u32();
  for (std::uint32_t i = 0; i < n_cfg; ++i) {
    std::string k = r.str();
    a.config.emplace_back(std::move(k), r.u64());
  }
  const std::uint32_t n_arrays = r.u32();
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    NamedArray arr;
    arr.name = r.str();
    const std::uint32_t rank = r.u32();
    for (std::uint32_t d = 0; d < rank; ++d) arr.shape.push_back(r.u64());
    const std::size_t n = shape_numel(arr.shape);
    if (n > r.remaining() / 4) throw CheckpointError("truncated payload");
    arr.values.resize(n);
    for (auto& f : arr.values) f = r.f32();
    a.arrays.push_back(std::move(arr));
  }
  if (r.remaining() != 0) throw CheckpointError("trailing bytes before hash");
  return a;
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  const auto bytes = serialize_archive(archive);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw CheckpointError("short write to " + path.string());
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return deserialize_archive(bytes);
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (unsigned char c : digest(bytes)) {
    s.push_back(kHex[c >> 4]);
    s.push_back(kHex[c & 15]);
  }
  return s;
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

std::size_t EncoderCheckpoint::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters) n += p.values.size();
  return n;
}

template <typename T>
Encoder<T> EncoderCheckpoint::instantiate() const {
  Encoder<T> enc(config, 0);
  copy_into(enc.named_parameters(), parameters);
  return enc;
}

template <typename T>
EncoderCheckpoint extract_encoder(const Seq2SeqModel<T>& model) {
  EncoderCheckpoint ckpt;
  ckpt.config = model.config().encoder();
  for (const auto& p : model.encoder().named_parameters())
    ckpt.parameters.push_back(to_array(p.name, p.tensor));
  return ckpt;
}

void save_encoder(const std::filesystem::path& path, const EncoderCheckpoint& ckpt) {
  Archive a;
  a.kind = CheckpointKind::kEncoderOnly;
  a.config = encoder_config_block(ckpt.config);
  a.arrays = ckpt.parameters;
  write_archive(path, a);
}

EncoderCheckpoint load_encoder(const std::filesystem::path& path) {
  Archive a = read_archive(path);
  if (a.kind != CheckpointKind::kEncoderOnly)
    throw CheckpointError(path.string() + " is not an encoder checkpoint");
  EncoderCheckpoint ckpt;
  ckpt.config = encoder_config_from(a);
  try {
    ckpt.config.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(e.what());
  }
  ckpt.parameters = std::move(a.arrays);
  return ckpt;
}

EncoderCheckpoint load_encoder(const std::filesystem::path& path,
                               const EncoderConfig& expected) {
  EncoderCheckpoint ckpt = load_encoder(path);
  if (!(ckpt.config == expected))
    throw CheckpointError(path.string() + ": encoder d_model " +
                          std::to_string(ckpt.config.d_model) + "/" +
                          std::to_string(ckpt.config.n_layers) +
                          " layers does not match expected " +
                          std::to_string(expected.d_model) + "/" +
                          std::to_string(expected.n_layers));
  return ckpt;
}

template <typename T>
void save_model(const std::filesystem::path& path, const Seq2SeqModel<T>& model) {
  Archive a;
  a.kind = CheckpointKind::kFullModel;
  a.config = model_config_block(model.config());
  for (const auto& p : model.named_parameters())
    a.arrays.push_back(to_array(p.name, p.tensor));
  write_archive(path, a);
}

ModelConfig read_model_config(const std::filesystem::path& path) {
  const Archive a = read_archive(path);
  if (a.kind != CheckpointKind::kFullModel)
    throw CheckpointError(path.string() + " is not a full-model checkpoint");
  return model_config_from(a);
}

template <typename T>
void load_model(const std::filesystem::path& path, Seq2SeqModel<T>& model) {
  const Archive a = read_archive(path);
  if (a.kind != CheckpointKind::kFullModel)
    throw CheckpointError(path.string() + " is not a full-model checkpoint");
  if (!(model_config_from(a) == model.config()))
    throw CheckpointError(path.string() + ": model config mismatch");
  copy_into(model.named_parameters(), a.arrays);
}

template Encoder<float> EncoderCheckpoint::instantiate<float>() const;
template Encoder<double> EncoderCheckpoint::instantiate<double>() const;
template EncoderCheckpoint extract_encoder(const Seq2SeqModel<float>&);
template EncoderCheckpoint extract_encoder(const Seq2SeqModel<double>&);
template void save_model(const std::filesystem::path&, const Seq2SeqModel<float>&);
template void save_model(const std::filesystem::path&, const Seq2SeqModel<double>&);
template void load_model(const std::filesystem::path&, Seq2SeqModel<float>&);
template void load_model(const std::filesystem::path&, Seq2SeqModel<double>&);

}  // namespace audapt
