// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference oracle for the autodiff engine. It only ever
// evaluates forward values, so it shares no code path with backward().

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "audapt/tensor.hpp"

namespace audapt::testing {

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t checked = 0;
};

inline double rel_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// `loss` rebuilds the scalar from the current leaf values on every call.
inline GradCheckResult grad_check(std::vector<Tensor<double>> leaves,
                                  const std::function<Tensor<double>()>& loss,
                                  double step = 1e-5, double floor = 1e-6,
                                  std::size_t max_per_leaf = SIZE_MAX,
                                  std::uint64_t subset_seed = 0) {
  for (auto& l : leaves) l.zero_grad();
  backward(loss());
  GradCheckResult res;
  std::mt19937_64 rng(subset_seed);
  for (auto& leaf : leaves) {
    std::vector<double> analytic(leaf.numel(), 0.0);
    if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), analytic.begin());
    std::vector<std::size_t> idx(leaf.numel());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (idx.size() > max_per_leaf) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(max_per_leaf);
    }
    auto data = leaf.mutable_data();
    for (std::size_t i : idx) {
      const double orig = data[i];
      double plus, minus;
      {
        NoGradGuard guard;
        data[i] = orig + step;
        plus = loss().item();
        data[i] = orig - step;
        minus = loss().item();
        data[i] = orig;
      }
      const double numeric = (plus - minus) / (2 * step);
      res.max_rel_error = std::max(res.max_rel_error, rel_error(analytic[i], numeric, floor));
      ++res.checked;
    }
  }
  return res;
}

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng,
                                    bool requires_grad = true, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor<double>::from(std::move(shape), std::move(v), requires_grad);
}

}  // namespace audapt::testing
