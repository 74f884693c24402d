// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels vs their OpenMP counterparts, plus one end-to-end
// encoder forward pass. Run with OMP_NUM_THREADS set to compare scaling.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "audapt/kernels.hpp"
#include "audapt/model.hpp"

namespace {

std::vector<float> random_vec(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> d(-1, 1);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Shapes: attention scores (T x dh x T), projections (T x d x d), the STFT
// basis product (frames x n_fft x 2*bins).
template <bool Parallel>
void BM_GemmNN(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  const auto a = random_vec(m * k), b = random_vec(k * n);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      audapt::kernels::parallel::gemm_nn<float>(m, n, k, a, b, c, false);
    else
      audapt::kernels::serial::gemm_nn<float>(m, n, k, a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(
      2.0 * double(m * n * k), benchmark::Counter::kIsIterationInvariantRate,
      benchmark::Counter::kIs1000);
}
BENCHMARK(BM_GemmNN<false>)->Args({150, 16, 150})->Args({150, 64, 64})->Args({300, 400, 402});
BENCHMARK(BM_GemmNN<true>)->Args({150, 16, 150})->Args({150, 64, 64})->Args({300, 400, 402});

template <bool Parallel>
void BM_Softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_vec(n * n);
  std::vector<float> y(n * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      audapt::kernels::parallel::softmax_rows<float>(n, n, x, y);
    else
      audapt::kernels::serial::softmax_rows<float>(n, n, x, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Softmax<false>)->Arg(150)->Arg(1500);
BENCHMARK(BM_Softmax<true>)->Arg(150)->Arg(1500);

void BM_EncoderForward(benchmark::State& state) {
  audapt::EncoderConfig cfg;
  cfg.max_frames = static_cast<std::size_t>(state.range(0));
  audapt::Encoder<float> enc(cfg, 3);
  const auto mel = audapt::Tensor<float>::from(
      {cfg.n_mels, 2 * cfg.max_frames}, random_vec(cfg.n_mels * 2 * cfg.max_frames));
  audapt::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(mel).data().data());
}
BENCHMARK(BM_EncoderForward)->Arg(150)->Arg(1500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
