// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "audapt/audio.hpp"
#include "audapt/error.hpp"

namespace audapt {
namespace {

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}
void put32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
  os.write(b.data(), 4);
}
void put16(std::ostream& os, std::uint16_t v) {
  const std::array<char, 2> b{char(v), char(v >> 8)};
  os.write(b.data(), 2);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw InvalidAudio(path.string() + " is not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t len = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0 && avail >= 16) {
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      if (format == kFormatExtensible && avail >= 26)
        format = le16(bytes.data() + body + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1);
  }
  if (!data || channels == 0 || rate == 0)
    throw InvalidAudio(path.string() + ": missing fmt or data chunk");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32)
    throw InvalidAudio(path.string() + ": unsupported encoding (format " +
                       std::to_string(format) + ", " + std::to_string(bits) +
                       " bits)");

  const std::size_t frame_bytes = std::size_t(channels) * bits / 8;
  const std::size_t frames = data_len / frame_bytes;
  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + f * frame_bytes + c * bits / 8;
      if (pcm16) {
        acc += static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else {
        const std::uint32_t u = le32(p);
        float v;
        std::memcpy(&v, &u, 4);
        acc += v;
      }
    }
    clip.samples[f] = static_cast<float>(acc / channels);
  }
  clip.validate();
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IOError("cannot write " + path.string());
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  os.write("RIFF", 4);
  put32(os, 36 + 2 * n);
  os.write("WAVEfmt ", 8);
  put32(os, 16);
  put16(os, kFormatPcm);
  put16(os, 1);
  put32(os, static_cast<std::uint32_t>(clip.sample_rate_hz));
  put32(os, static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  put16(os, 2);
  put16(os, 16);
  os.write("data", 4);
  put32(os, 2 * n);
  for (const float s : clip.samples) {
    const double c = std::clamp(static_cast<double>(s), -1.0, 1.0);
    put16(os, static_cast<std::uint16_t>(
                  static_cast<std::int16_t>(std::lround(c * 32767.0))));
  }
  if (!os) throw IOError("short write to " + path.string());
}

}  // namespace audapt
