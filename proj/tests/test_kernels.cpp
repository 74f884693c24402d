// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <omp.h>

#include <array>
#include <random>
#include <vector>

#include "audapt/kernels.hpp"

using namespace audapt::kernels;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(d(rng));
  return v;
}

}  // namespace

TEST_CASE_TEMPLATE("parallel gemm variants agree with the serial reference", T,
                   float, double) {
  std::mt19937_64 rng(7);
  const double tol = sizeof(T) == 4 ? 1e-5 : 1e-12;
  using Dims = std::array<std::size_t, 3>;
  for (const auto& [m, n, k] : {Dims{1, 1, 1}, Dims{3, 5, 7}, Dims{37, 19, 300}, Dims{129, 65, 64}}) {
    const auto a = random_vec<T>(m * k, rng);
    const auto b_nn = random_vec<T>(k * n, rng);
    const auto b_nt = random_vec<T>(n * k, rng);
    const auto a_tn = random_vec<T>(k * m, rng);
    const auto init = random_vec<T>(m * n, rng);
    for (bool acc : {false, true}) {
      std::vector<T> ref = init, par = init;
      serial::gemm_nn<T>(m, n, k, a, b_nn, ref, acc);
      parallel::gemm_nn<T>(m, n, k, a, b_nn, par, acc);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(par[i] == doctest::Approx(ref[i]).epsilon(tol));
      ref = init, par = init;
      serial::gemm_nt<T>(m, n, k, a, b_nt, ref, acc);
      parallel::gemm_nt<T>(m, n, k, a, b_nt, par, acc);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(par[i] == doctest::Approx(ref[i]).epsilon(tol));
      ref = init, par = init;
      serial::gemm_tn<T>(m, n, k, a_tn, b_nn, ref, acc);
      parallel::gemm_tn<T>(m, n, k, a_tn, b_nn, par, acc);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(par[i] == doctest::Approx(ref[i]).epsilon(tol));
    }
  }
}

TEST_CASE("parallel gemm is bit-identical across thread counts") {
  std::mt19937_64 rng(11);
  const std::size_t m = 301, n = 64, k = 257;
  const auto a = random_vec<float>(m * k, rng);
  const auto b = random_vec<float>(k * n, rng);
  std::vector<float> one(m * n), many(m * n);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  parallel::gemm_nn<float>(m, n, k, a, b, one, false);
  omp_set_num_threads(4);
  parallel::gemm_nn<float>(m, n, k, a, b, many, false);
  omp_set_num_threads(saved);
  CHECK(one == many);
}

TEST_CASE("softmax and transpose kernels agree") {
  std::mt19937_64 rng(3);
  const std::size_t r = 50, c = 33;
  auto x = random_vec<double>(r * c, rng);
  for (auto& v : x) v *= 20;
  std::vector<double> s1(r * c), s2(r * c), t1(r * c), t2(r * c);
  serial::softmax_rows<double>(r, c, x, s1);
  parallel::softmax_rows<double>(r, c, x, s2);
  serial::transpose<double>(r, c, x, t1);
  parallel::transpose<double>(r, c, x, t2);
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s2[i] == doctest::Approx(s1[i]).epsilon(1e-14));
  CHECK(t1 == t2);
  for (std::size_t row = 0; row < r; ++row) {
    double total = 0;
    for (std::size_t j = 0; j < c; ++j) total += s2[row * c + j];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}
