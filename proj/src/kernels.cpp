// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "audapt/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace audapt::kernels {

namespace serial {

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = accumulate ? c[i * n + j] : T(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = accumulate ? c[i * n + j] : T(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc;
    }
  }
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = accumulate ? c[i * n + j] : T(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

template <typename T>
void softmax_rows(std::size_t rows, std::size_t cols, std::span<const T> x,
                  std::span<T> y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * cols;
    T* yr = y.data() + r * cols;
    T mx = *std::max_element(xr, xr + cols);
    T sum = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    for (std::size_t j = 0; j < cols; ++j) yr[j] /= sum;
  }
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, std::span<const T> x,
               std::span<T> y) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) y[c * rows + r] = x[r * cols + c];
}

}  // namespace serial

namespace parallel {
namespace {

// Work below this many multiply-adds stays on the calling thread.
constexpr std::size_t kParallelFlops = 1 << 15;
constexpr std::size_t kRowBlock = 4;
constexpr std::size_t kDepthTile = 256;

// Rows [r0, r1) of C = A * B. Each C element accumulates over p in ascending
// order; blocking only changes which loads are shared.
template <typename T>
void gemm_nn_rows(std::size_t r0, std::size_t r1, std::size_t n, std::size_t k,
                  const T* __restrict a, const T* __restrict b,
                  T* __restrict c, bool accumulate) {
  if (!accumulate) std::fill(c + r0 * n, c + r1 * n, T(0));
  for (std::size_t p0 = 0; p0 < k; p0 += kDepthTile) {
    const std::size_t p1 = std::min(k, p0 + kDepthTile);
    std::size_t i = r0;
    for (; i + kRowBlock <= r1; i += kRowBlock) {
      T* c0 = c + i * n;
      T* c1 = c0 + n;
      T* c2 = c1 + n;
      T* c3 = c2 + n;
      const T* a0 = a + i * k;
      const T* a1 = a0 + k;
      const T* a2 = a1 + k;
      const T* a3 = a2 + k;
      for (std::size_t p = p0; p < p1; ++p) {
        const T* br = b + p * n;
        const T v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
        for (std::size_t j = 0; j < n; ++j) {
          const T bj = br[j];
          c0[j] += v0 * bj;
          c1[j] += v1 * bj;
          c2[j] += v2 * bj;
          c3[j] += v3 * bj;
        }
      }
    }
    for (; i < r1; ++i) {
      T* ci = c + i * n;
      const T* ai = a + i * k;
      for (std::size_t p = p0; p < p1; ++p) {
        const T* br = b + p * n;
        const T v = ai[p];
        for (std::size_t j = 0; j < n; ++j) ci[j] += v * br[j];
      }
    }
  }
}

bool worth_parallel(std::size_t m, std::size_t n, std::size_t k) {
  return m > 1 && m * n * k >= kParallelFlops && omp_get_max_threads() > 1;
}

}  // namespace

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate) {
  if (!worth_parallel(m, n, k)) {
    gemm_nn_rows(0, m, n, k, a.data(), b.data(), c.data(), accumulate);
    return;
  }
  const std::size_t blocks = (m + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t r0 = blk * kRowBlock;
    const std::size_t r1 = std::min(m, r0 + kRowBlock);
    gemm_nn_rows(r0, r1, n, k, a.data(), b.data(), c.data(), accumulate);
  }
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, std::span<const T> x,
               std::span<T> y) {
  constexpr std::size_t kTile = 32;
  const std::size_t row_tiles = (rows + kTile - 1) / kTile;
#pragma omp parallel for schedule(static) if (rows * cols > (1u << 16))
  for (std::size_t rt = 0; rt < row_tiles; ++rt) {
    const std::size_t r0 = rt * kTile;
    const std::size_t r1 = std::min(rows, r0 + kTile);
    for (std::size_t c0 = 0; c0 < cols; c0 += kTile) {
      const std::size_t c1 = std::min(cols, c0 + kTile);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) y[c * rows + r] = x[r * cols + c];
    }
  }
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate) {
  std::vector<T> bt(n * k);
  transpose<T>(n, k, b, bt);
  gemm_nn<T>(m, n, k, a, bt, c, accumulate);
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate) {
  std::vector<T> at(m * k);
  transpose<T>(k, m, a, at);
  gemm_nn<T>(m, n, k, at, b, c, accumulate);
}

template <typename T>
void softmax_rows(std::size_t rows, std::size_t cols, std::span<const T> x,
                  std::span<T> y) {
#pragma omp parallel for schedule(static) if (rows * cols > (1u << 14))
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * cols;
    T* yr = y.data() + r * cols;
    T mx = *std::max_element(xr, xr + cols);
    T sum = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    const T inv = T(1) / sum;
    for (std::size_t j = 0; j < cols; ++j) yr[j] *= inv;
  }
}

}  // namespace parallel

int max_threads() { return omp_get_max_threads(); }

#define AUDAPT_INSTANTIATE(T)                                                  \
  template void serial::gemm_nn<T>(std::size_t, std::size_t, std::size_t,     \
                                   std::span<const T>, std::span<const T>,     \
                                   std::span<T>, bool);                        \
  template void serial::gemm_nt<T>(std::size_t, std::size_t, std::size_t,     \
                                   std::span<const T>, std::span<const T>,     \
                                   std::span<T>, bool);                        \
  template void serial::gemm_tn<T>(std::size_t, std::size_t, std::size_t,     \
                                   std::span<const T>, std::span<const T>,     \
                                   std::span<T>, bool);                        \
  template void serial::softmax_rows<T>(std::size_t, std::size_t,             \
                                        std::span<const T>, std::span<T>);     \
  template void serial::transpose<T>(std::size_t, std::size_t,                \
                                     std::span<const T>, std::span<T>);        \
  template void parallel::gemm_nn<T>(std::size_t, std::size_t, std::size_t,   \
                                     std::span<const T>, std::span<const T>,   \
                                     std::span<T>, bool);                      \
  template void parallel::gemm_nt<T>(std::size_t, std::size_t, std::size_t,   \
                                     std::span<const T>, std::span<const T>,   \
                                     std::span<T>, bool);                      \
  template void parallel::gemm_tn<T>(std::size_t, std::size_t, std::size_t,   \
                                     std::span<const T>, std::span<const T>,   \
                                     std::span<T>, bool);                      \
  template void parallel::softmax_rows<T>(std::size_t, std::size_t,           \
                                          std::span<const T>, std::span<T>);   \
  template void parallel::transpose<T>(std::size_t, std::size_t,              \
                                       std::span<const T>, std::span<T>);

AUDAPT_INSTANTIATE(float)
AUDAPT_INSTANTIATE(double)

#undef AUDAPT_INSTANTIATE

}  // namespace audapt::kernels
