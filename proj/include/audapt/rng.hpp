// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Portable random helpers. The standard distributions are implementation
// defined, so everything that feeds a committed fixture goes through these.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace audapt {

// 53 random bits mapped to [0, 1).
inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n); n > 0.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const auto j = static_cast<std::size_t>(unit_double(rng) * static_cast<double>(n));
  return j < n ? j : n - 1;
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_double(rng);
}

// Box-Muller; one draw per call.
inline double standard_normal(std::mt19937_64& rng) {
  double u = unit_double(rng);
  while (u <= 0.0) u = unit_double(rng);
  const double v = unit_double(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
}

// Fisher-Yates.
template <typename T>
void shuffle_in_place(std::span<T> items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i)
    std::swap(items[i - 1], items[uniform_index(rng, i)]);
}

// splitmix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace audapt
