// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major compute kernels.
//
// Two implementations of each kernel are kept side by side:
//   serial::   straightforward loops, the reference used by tests
//   parallel:: OpenMP kernels used by the tensor engine
// Parallel kernels split work over output rows only, so every output element
// is accumulated in the same order regardless of the thread count. Results
// are therefore bit-identical between runs with different OMP_NUM_THREADS.

#pragma once

#include <cstddef>
#include <span>

namespace audapt::kernels {

namespace serial {

// C[m x n] (+)= A[m x k] * B[k x n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate);

// C[m x n] (+)= A[m x k] * B[n x k]^T
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate);

// C[m x n] (+)= A[k x m]^T * B[k x n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate);

// Row-wise softmax over a [rows x cols] matrix, max-subtracted.
template <typename T>
void softmax_rows(std::size_t rows, std::size_t cols, std::span<const T> x,
                  std::span<T> y);

template <typename T>
void transpose(std::size_t rows, std::size_t cols, std::span<const T> x,
               std::span<T> y);

}  // namespace serial

namespace parallel {

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate);

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate);

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a,
             std::span<const T> b, std::span<T> c, bool accumulate);

template <typename T>
void softmax_rows(std::size_t rows, std::size_t cols, std::span<const T> x,
                  std::span<T> y);

template <typename T>
void transpose(std::size_t rows, std::size_t cols, std::span<const T> x,
               std::span<T> y);

}  // namespace parallel

// Number of OpenMP threads the parallel kernels will use.
int max_threads();

}  // namespace audapt::kernels
