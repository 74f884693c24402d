// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// AdamW with decoupled weight decay and bias correction. Plain Adam is the
// weight_decay = 0 case.

#pragma once

#include <cstddef>
#include <vector>

#include "audapt/tensor.hpp"

namespace audapt {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

template <typename T>
struct AdamState {
  std::size_t t = 0;  // completed steps
  std::vector<std::vector<T>> m, v;

  // Sizes the moment buffers to match `params`, zero-filled.
  void init(const std::vector<Tensor<T>>& params);
};

// One update, in place:
//   p <- p (1 - lr wd)
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   p <- p - lr mhat / (sqrt(vhat) + eps)
// Parameters without a gradient buffer are treated as having g = 0. Throws
// NumericalError before touching any state if a gradient is not finite.
template <typename T>
void adamw_step(std::vector<Tensor<T>>& params, AdamState<T>& state, double lr,
                const AdamConfig& cfg);

}  // namespace audapt
