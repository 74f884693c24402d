// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "audapt/optim.hpp"

#include <cmath>

#include "audapt/error.hpp"

namespace audapt {

template <typename T>
void AdamState<T>::init(const std::vector<Tensor<T>>& params) {
  t = 0;
  m.clear();
  v.clear();
  for (const auto& p : params) {
    m.emplace_back(p.numel(), T(0));
    v.emplace_back(p.numel(), T(0));
  }
}

template <typename T>
void adamw_step(std::vector<Tensor<T>>& params, AdamState<T>& state, double lr,
                const AdamConfig& cfg) {
  if (state.m.size() != params.size()) throw ShapeError("optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].numel())
      throw ShapeError("optimizer moment " + std::to_string(i) + " has the wrong size");
    if (!params[i].has_grad()) continue;
    for (const T g : params[i].grad())
      if (!std::isfinite(g))
        throw NumericalError("non-finite gradient in parameter " + std::to_string(i));
  }
  state.t += 1;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  const double decay = 1.0 - lr * cfg.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    const bool has_grad = params[i].has_grad();
    const T* g = has_grad ? params[i].grad().data() : nullptr;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = has_grad ? static_cast<double>(g[j]) : 0.0;
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double update = (mj / c1) / (std::sqrt(vj / c2) + cfg.eps);
      p[j] = static_cast<T>(static_cast<double>(p[j]) * decay - lr * update);
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adamw_step(std::vector<Tensor<float>>&, AdamState<float>&, double,
                         const AdamConfig&);
template void adamw_step(std::vector<Tensor<double>>&, AdamState<double>&, double,
                         const AdamConfig&);

}  // namespace audapt
