// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "audapt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "audapt/error.hpp"
#include "audapt/kernels.hpp"

namespace audapt {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? " x " : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->data.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
  if (shape_numel(shape) != data.size())
    throw ShapeError("buffer of " + std::to_string(data.size()) +
                     " values does not fill shape " + shape_str(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on " + shape_str(shape()));
  return node_->data[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(node_->shape, node_->data, false);
}

namespace {

template <typename T>
using NodePtr = std::shared_ptr<TensorNode<T>>;

template <typename T>
void check_finite(const std::vector<T>& v, const char* op) {
  for (const T x : v)
    if (!std::isfinite(x))
      throw NumericalError(std::string("non-finite value produced by ") + op);
}

// Wraps a freshly computed value into a tensor, recording the backward rule
// when any input requires a gradient and recording is enabled.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, const char* op,
                      std::initializer_list<const Tensor<T>*> inputs,
                      std::function<void(TensorNode<T>&)> backward_fn) {
  check_finite(data, op);
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs = false;
  if (grad_enabled())
    for (const auto* in : inputs) needs = needs || in->requires_grad();
  if (needs) {
    node->requires_grad = true;
    for (const auto* in : inputs) node->parents.push_back(in->node_ptr());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* op) {
  if (t.rank() != rank)
    throw ShapeError(std::string(op) + " expects rank " + std::to_string(rank) +
                     ", got " + shape_str(t.shape()));
}

// True when b is a row vector broadcast over the leading rows of a.
template <typename T>
bool row_broadcast(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return false;
  if (a.rank() == 2 && b.rank() == 1 && b.dim(0) == a.dim(1)) return true;
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul: " + shape_str(a.shape()) + " * " +
                     shape_str(b.shape()));
  std::vector<T> out(m * n);
  kernels::parallel::gemm_nn<T>(m, n, k, a.data(), b.data(), out, false);
  return make_result<T>({m, n}, std::move(out), "matmul", {&a, &b},
                        [m, n, k](TensorNode<T>& o) {
                          auto& pa = *o.parents[0];
                          auto& pb = *o.parents[1];
                          if (pa.requires_grad)
                            kernels::parallel::gemm_nt<T>(
                                m, k, n, o.grad, pb.data,
                                {pa.grad_buffer(), m * k}, true);
                          if (pb.requires_grad)
                            kernels::parallel::gemm_tn<T>(
                                k, n, m, pa.data, o.grad,
                                {pb.grad_buffer(), k * n}, true);
                        });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const bool bc = row_broadcast(a, b, "add");
  const std::size_t n = a.numel(), cols = b.numel();
  std::vector<T> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  if (bc) {
    for (std::size_t i = 0; i < n; ++i) out[i] += bd[i % cols];
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] += bd[i];
  }
  return make_result<T>(a.shape(), std::move(out), "add", {&a, &b},
                        [n, cols, bc](TensorNode<T>& o) {
                          auto& pa = *o.parents[0];
                          auto& pb = *o.parents[1];
                          if (pa.requires_grad) {
                            T* g = pa.grad_buffer();
                            for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i];
                          }
                          if (pb.requires_grad) {
                            T* g = pb.grad_buffer();
                            if (bc) {
                              for (std::size_t i = 0; i < n; ++i)
                                g[i % cols] += o.grad[i];
                            } else {
                              for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  const bool bc = row_broadcast(a, b, "mul");
  const std::size_t n = a.numel(), cols = b.numel();
  std::vector<T> out(n);
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = ad[i] * bd[bc ? i % cols : i];
  return make_result<T>(a.shape(), std::move(out), "mul", {&a, &b},
                        [n, cols, bc](TensorNode<T>& o) {
                          auto& pa = *o.parents[0];
                          auto& pb = *o.parents[1];
                          if (pa.requires_grad) {
                            T* g = pa.grad_buffer();
                            for (std::size_t i = 0; i < n; ++i)
                              g[i] += o.grad[i] * pb.data[bc ? i % cols : i];
                          }
                          if (pb.requires_grad) {
                            T* g = pb.grad_buffer();
                            for (std::size_t i = 0; i < n; ++i)
                              g[bc ? i % cols : i] += o.grad[i] * pa.data[i];
                          }
                        });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  return make_result<T>(a.shape(), std::move(out), "scale", {&a},
                        [factor](TensorNode<T>& o) {
                          auto& pa = *o.parents[0];
                          T* g = pa.grad_buffer();
                          for (std::size_t i = 0; i < o.grad.size(); ++i)
                            g[i] += factor * o.grad[i];
                        });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<T> out(r * c);
  kernels::parallel::transpose<T>(r, c, a.data(), out);
  return make_result<T>({c, r}, std::move(out), "transpose", {&a},
                        [r, c](TensorNode<T>& o) {
                          auto& pa = *o.parents[0];
                          T* g = pa.grad_buffer();
                          for (std::size_t i = 0; i < r; ++i)
                            for (std::size_t j = 0; j < c; ++j)
                              g[i * c + j] += o.grad[j * r + i];
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw ShapeError("reshape " + shape_str(a.shape()) + " -> " + shape_str(shape));
  std::vector<T> out(a.data().begin(), a.data().end());
  return make_result<T>(std::move(shape), std::move(out), "reshape", {&a},
                        [](TensorNode<T>& o) {
                          auto& pa = *o.parents[0];
                          T* g = pa.grad_buffer();
                          for (std::size_t i = 0; i < o.grad.size(); ++i)
                            g[i] += o.grad[i];
                        });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t begin,
                std::size_t end) {
  require_rank(a, 2, "slice");
  if (axis > 1 || begin >= end || end > a.dim(axis))
    throw ShapeError("slice [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") on axis " + std::to_string(axis) +
                     " of " + shape_str(a.shape()));
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  const auto ad = a.data();
  if (axis == 0) {
    std::vector<T> out(ad.begin() + begin * cols, ad.begin() + end * cols);
    return make_result<T>({end - begin, cols}, std::move(out), "slice", {&a},
                          [begin, cols](TensorNode<T>& o) {
                            T* g = o.parents[0]->grad_buffer() + begin * cols;
                            for (std::size_t i = 0; i < o.grad.size(); ++i)
                              g[i] += o.grad[i];
                          });
  }
  const std::size_t w = end - begin;
  std::vector<T> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(ad.begin() + r * cols + begin, w, out.begin() + r * w);
  return make_result<T>({rows, w}, std::move(out), "slice", {&a},
                        [rows, cols, begin, w](TensorNode<T>& o) {
                          T* g = o.parents[0]->grad_buffer();
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t j = 0; j < w; ++j)
                              g[r * cols + begin + j] += o.grad[r * w + j];
                        });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  if (axis > 1) throw ShapeError("concat axis must be 0 or 1");
  for (const auto& p : parts) require_rank(p, 2, "concat");
  const std::size_t other = parts[0].dim(1 - axis);
  std::size_t total = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.dim(1 - axis) != other)
      throw ShapeError("concat: mismatched " + shape_str(p.shape()) + " vs " +
                       shape_str(parts[0].shape()));
    offsets.push_back(total);
    total += p.dim(axis);
  }
  const std::size_t rows = axis == 0 ? total : other;
  const std::size_t cols = axis == 0 ? other : total;
  std::vector<T> out(rows * cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pd = parts[k].data();
    if (axis == 0) {
      std::copy(pd.begin(), pd.end(), out.begin() + offsets[k] * cols);
    } else {
      const std::size_t w = parts[k].dim(1);
      for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(pd.begin() + r * w, w, out.begin() + r * cols + offsets[k]);
    }
  }
  auto node = std::make_shared<TensorNode<T>>();
  check_finite(out, "concat");
  node->shape = {rows, cols};
  node->data = std::move(out);
  node->op = "concat";
  bool needs = false;
  if (grad_enabled())
    for (const auto& p : parts) needs = needs || p.requires_grad();
  if (needs) {
    node->requires_grad = true;
    for (const auto& p : parts) node->parents.push_back(p.node_ptr());
    node->backward_fn = [offsets, axis, rows, cols](TensorNode<T>& o) {
      for (std::size_t k = 0; k < o.parents.size(); ++k) {
        auto& p = *o.parents[k];
        if (!p.requires_grad) continue;
        T* g = p.grad_buffer();
        if (axis == 0) {
          const T* src = o.grad.data() + offsets[k] * cols;
          for (std::size_t i = 0; i < p.data.size(); ++i) g[i] += src[i];
        } else {
          const std::size_t w = p.shape[1];
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < w; ++j)
              g[r * w + j] += o.grad[r * cols + offsets[k] + j];
        }
      }
    };
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const int> ids) {
  require_rank(table, 2, "embedding_lookup");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<T> out(ids.size() * d);
  const auto td = table.data();
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= vocab)
      throw ShapeError("embedding id " + std::to_string(ids[t]) +
                       " outside vocabulary of " + std::to_string(vocab));
    std::copy_n(td.begin() + ids[t] * d, d, out.begin() + t * d);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return make_result<T>({ids.size(), d}, std::move(out), "embedding_lookup",
                        {&table}, [saved, d](TensorNode<T>& o) {
                          T* g = o.parents[0]->grad_buffer();
                          for (std::size_t t = 0; t < saved.size(); ++t)
                            for (std::size_t j = 0; j < d; ++j)
                              g[saved[t] * d + j] += o.grad[t * d + j];
                        });
}

namespace {

// Softmax over rows of a [rows x cols] buffer with its backward rule.
template <typename T>
Tensor<T> softmax_last(const Tensor<T>& a, std::size_t rows, std::size_t cols) {
  std::vector<T> out(rows * cols);
  kernels::parallel::softmax_rows<T>(rows, cols, a.data(), out);
  return make_result<T>(a.shape(), std::move(out), "softmax", {&a},
                        [rows, cols](TensorNode<T>& o) {
                          T* g = o.parents[0]->grad_buffer();
#pragma omp parallel for schedule(static) if (rows * cols > (1u << 14))
                          for (std::size_t r = 0; r < rows; ++r) {
                            const T* y = o.data.data() + r * cols;
                            const T* gy = o.grad.data() + r * cols;
                            T dot = 0;
                            for (std::size_t j = 0; j < cols; ++j) dot += gy[j] * y[j];
                            T* gx = g + r * cols;
                            for (std::size_t j = 0; j < cols; ++j)
                              gx[j] += y[j] * (gy[j] - dot);
                          }
                        });
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& a, std::size_t axis) {
  if (a.rank() == 1 && axis == 0) return softmax_last(a, 1, a.numel());
  require_rank(a, 2, "softmax");
  if (axis == 1) return softmax_last(a, a.dim(0), a.dim(1));
  if (axis == 0) return transpose(softmax_last(transpose(a), a.dim(1), a.dim(0)));
  throw ShapeError("softmax axis " + std::to_string(axis));
}

template <typename T>
Tensor<T> causal_mask(const Tensor<T>& a) {
  require_rank(a, 2, "causal_mask");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  std::vector<T> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = i + 1; j < cols; ++j)
      out[i * cols + j] = static_cast<T>(kMaskedLogit);
  return make_result<T>(a.shape(), std::move(out), "causal_mask", {&a},
                        [rows, cols](TensorNode<T>& o) {
                          T* g = o.parents[0]->grad_buffer();
                          for (std::size_t i = 0; i < rows; ++i)
                            for (std::size_t j = 0; j <= i && j < cols; ++j)
                              g[i * cols + j] += o.grad[i * cols + j];
                        });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& a, T eps) {
  const std::size_t cols = a.shape().back();
  const std::size_t rows = a.numel() / cols;
  std::vector<T> out(a.numel());
  std::vector<T> inv_std(rows);
  const auto ad = a.data();
#pragma omp parallel for schedule(static) if (rows * cols > (1u << 14))
  for (std::size_t r = 0; r < rows; ++r) {
    const T* x = ad.data() + r * cols;
    T mu = 0;
    for (std::size_t j = 0; j < cols; ++j) mu += x[j];
    mu /= static_cast<T>(cols);
    T var = 0;
    for (std::size_t j = 0; j < cols; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<T>(cols);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < cols; ++j) out[r * cols + j] = (x[j] - mu) * is;
  }
  return make_result<T>(
      a.shape(), std::move(out), "layer_norm", {&a},
      [rows, cols, inv_std = std::move(inv_std)](TensorNode<T>& o) {
        T* g = o.parents[0]->grad_buffer();
        const T inv_n = T(1) / static_cast<T>(cols);
#pragma omp parallel for schedule(static) if (rows * cols > (1u << 14))
        for (std::size_t r = 0; r < rows; ++r) {
          const T* y = o.data.data() + r * cols;
          const T* gy = o.grad.data() + r * cols;
          T mean_g = 0, mean_gy = 0;
          for (std::size_t j = 0; j < cols; ++j) {
            mean_g += gy[j];
            mean_gy += gy[j] * y[j];
          }
          mean_g *= inv_n;
          mean_gy *= inv_n;
          T* gx = g + r * cols;
          for (std::size_t j = 0; j < cols; ++j)
            gx[j] += inv_std[r] * (gy[j] - mean_g - y[j] * mean_gy);
        }
      });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  const std::size_t n = a.numel();
  const auto ad = a.data();
  std::vector<T> out(n);
  const T inv_sqrt2 = static_cast<T>(1.0 / std::numbers::sqrt2);
#pragma omp parallel for schedule(static) if (n > (1u << 15))
  for (std::size_t i = 0; i < n; ++i)
    out[i] = T(0.5) * ad[i] * (T(1) + std::erf(ad[i] * inv_sqrt2));
  return make_result<T>(a.shape(), std::move(out), "gelu", {&a},
                        [n, inv_sqrt2](TensorNode<T>& o) {
                          auto& pa = *o.parents[0];
                          T* g = pa.grad_buffer();
                          const T inv_sqrt_2pi = static_cast<T>(
                              0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
#pragma omp parallel for schedule(static) if (n > (1u << 15))
                          for (std::size_t i = 0; i < n; ++i) {
                            const T x = pa.data[i];
                            const T cdf = T(0.5) * (T(1) + std::erf(x * inv_sqrt2));
                            const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * x * x);
                            g[i] += o.grad[i] * (cdf + x * pdf);
                          }
                        });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a, std::size_t axis) {
  const auto ad = a.data();
  if (a.rank() == 1) {
    if (axis != 0) throw ShapeError("mean axis out of range");
    const std::size_t n = a.numel();
    T s = 0;
    for (const T v : ad) s += v;
    return make_result<T>({}, {s / static_cast<T>(n)}, "mean", {&a},
                          [n](TensorNode<T>& o) {
                            T* g = o.parents[0]->grad_buffer();
                            const T share = o.grad[0] / static_cast<T>(n);
                            for (std::size_t i = 0; i < n; ++i) g[i] += share;
                          });
  }
  require_rank(a, 2, "mean");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  if (axis == 0) {
    std::vector<T> out(cols, T(0));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out[c] += ad[r * cols + c];
    for (auto& v : out) v /= static_cast<T>(rows);
    return make_result<T>({cols}, std::move(out), "mean", {&a},
                          [rows, cols](TensorNode<T>& o) {
                            T* g = o.parents[0]->grad_buffer();
                            const T inv = T(1) / static_cast<T>(rows);
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t c = 0; c < cols; ++c)
                                g[r * cols + c] += o.grad[c] * inv;
                          });
  }
  if (axis != 1) throw ShapeError("mean axis out of range");
  std::vector<T> out(rows, T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r] += ad[r * cols + c];
    out[r] /= static_cast<T>(cols);
  }
  return make_result<T>({rows}, std::move(out), "mean", {&a},
                        [rows, cols](TensorNode<T>& o) {
                          T* g = o.parents[0]->grad_buffer();
                          const T inv = T(1) / static_cast<T>(cols);
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t c = 0; c < cols; ++c)
                              g[r * cols + c] += o.grad[r] * inv;
                        });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (const T v : a.data()) s += v;
  return make_result<T>({}, {s}, "sum", {&a}, [](TensorNode<T>& o) {
    auto& pa = *o.parents[0];
    T* g = pa.grad_buffer();
    for (std::size_t i = 0; i < pa.data.size(); ++i) g[i] += o.grad[0];
  });
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t kernel, std::size_t stride,
                 std::size_t pad) {
  require_rank(x, 2, "conv1d");
  require_rank(weight, 2, "conv1d");
  const std::size_t time = x.dim(0), in_ch = x.dim(1), out_ch = weight.dim(1);
  if (weight.dim(0) != kernel * in_ch || bias.rank() != 1 ||
      bias.dim(0) != out_ch || stride == 0)
    throw ShapeError("conv1d: input " + shape_str(x.shape()) + ", weight " +
                     shape_str(weight.shape()) + ", bias " +
                     shape_str(bias.shape()));
  if (time + 2 * pad < kernel) throw ShapeError("conv1d: input shorter than kernel");
  const std::size_t out_t = (time + 2 * pad - kernel) / stride + 1;
  const std::size_t width = kernel * in_ch;

  // im2col: column row t holds the receptive field of output frame t.
  std::vector<T> cols(out_t * width, T(0));
  const auto xd = x.data();
  for (std::size_t t = 0; t < out_t; ++t) {
    for (std::size_t tap = 0; tap < kernel; ++tap) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + tap) -
                                 static_cast<std::ptrdiff_t>(pad);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(time)) continue;
      std::copy_n(xd.begin() + src * in_ch, in_ch,
                  cols.begin() + t * width + tap * in_ch);
    }
  }
  std::vector<T> out(out_t * out_ch);
  kernels::parallel::gemm_nn<T>(out_t, out_ch, width, cols, weight.data(), out,
                                false);
  const auto bd = bias.data();
  for (std::size_t t = 0; t < out_t; ++t)
    for (std::size_t c = 0; c < out_ch; ++c) out[t * out_ch + c] += bd[c];

  const bool keep_cols = grad_enabled() && weight.requires_grad();
  return make_result<T>(
      {out_t, out_ch}, std::move(out), "conv1d", {&x, &weight, &bias},
      [time, in_ch, out_ch, out_t, width, kernel, stride, pad,
       cols = keep_cols ? std::move(cols) : std::vector<T>{}](TensorNode<T>& o) {
        auto& px = *o.parents[0];
        auto& pw = *o.parents[1];
        auto& pb = *o.parents[2];
        if (pw.requires_grad)
          kernels::parallel::gemm_tn<T>(width, out_ch, out_t, cols, o.grad,
                                        {pw.grad_buffer(), width * out_ch}, true);
        if (pb.requires_grad) {
          T* g = pb.grad_buffer();
          for (std::size_t t = 0; t < out_t; ++t)
            for (std::size_t c = 0; c < out_ch; ++c) g[c] += o.grad[t * out_ch + c];
        }
        if (px.requires_grad) {
          std::vector<T> dcols(out_t * width);
          kernels::parallel::gemm_nt<T>(out_t, width, out_ch, o.grad, pw.data,
                                        dcols, false);
          T* g = px.grad_buffer();
          for (std::size_t t = 0; t < out_t; ++t) {
            for (std::size_t tap = 0; tap < kernel; ++tap) {
              const std::ptrdiff_t src =
                  static_cast<std::ptrdiff_t>(t * stride + tap) -
                  static_cast<std::ptrdiff_t>(pad);
              if (src < 0 || src >= static_cast<std::ptrdiff_t>(time)) continue;
              for (std::size_t c = 0; c < in_ch; ++c)
                g[src * in_ch + c] += dcols[t * width + tap * in_ch + c];
            }
          }
        }
      });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> targets,
                        int ignore_index) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t rows = logits.dim(0), vocab = logits.dim(1);
  if (targets.size() != rows)
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(rows) + " rows");
  std::size_t count = 0;
  for (const int t : targets) {
    if (t == ignore_index) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= vocab)
      throw ShapeError("cross_entropy: target " + std::to_string(t) +
                       " outside [0, " + std::to_string(vocab) + ")");
    ++count;
  }
  if (count == 0) throw DegenerateBatch("every target position is ignored");

  std::vector<T> probs(rows * vocab);
  kernels::parallel::softmax_rows<T>(rows, vocab, logits.data(), probs);
  const auto ld = logits.data();
  T total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] == ignore_index) continue;
    // log-softmax evaluated directly to keep saturated cases exact
    const T* x = ld.data() + r * vocab;
    const T mx = *std::max_element(x, x + vocab);
    T s = 0;
    for (std::size_t j = 0; j < vocab; ++j) s += std::exp(x[j] - mx);
    total += std::log(s) + mx - x[targets[r]];
  }
  std::vector<int> saved(targets.begin(), targets.end());
  return make_result<T>(
      {}, {total / static_cast<T>(count)}, "cross_entropy", {&logits},
      [rows, vocab, count, ignore_index, saved = std::move(saved),
       probs = std::move(probs)](TensorNode<T>& o) {
        T* g = o.parents[0]->grad_buffer();
        const T share = o.grad[0] / static_cast<T>(count);
        for (std::size_t r = 0; r < rows; ++r) {
          if (saved[r] == ignore_index) continue;
          for (std::size_t j = 0; j < vocab; ++j)
            g[r * vocab + j] += share * probs[r * vocab + j];
          g[r * vocab + saved[r]] -= share;
        }
      });
}

template <typename T>
void backward(const Tensor<T>& root) {
  if (root.numel() != 1 || !root.shape().empty())
    throw ShapeError("backward from non-scalar " + shape_str(root.shape()));
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<TensorNode<T>*> order;
  std::unordered_set<TensorNode<T>*> visited;
  std::vector<std::pair<TensorNode<T>*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode<T>* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Interior gradients are rebuilt from scratch on every pass; leaves keep
  // accumulating until zero_grad().
  for (auto* n : order)
    if (!n->is_leaf()) n->grad.assign(n->data.size(), T(0));
  root.node()->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode<T>* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

#define AUDAPT_INSTANTIATE(T)                                                  \
  template class Tensor<T>;                                                    \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> scale(const Tensor<T>&, T);                              \
  template Tensor<T> transpose(const Tensor<T>&);                             \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                        \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t,        \
                           std::size_t);                                      \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);      \
  template Tensor<T> embedding_lookup(const Tensor<T>&, std::span<const int>);\
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                  \
  template Tensor<T> causal_mask(const Tensor<T>&);                           \
  template Tensor<T> layer_norm(const Tensor<T>&, T);                         \
  template Tensor<T> gelu(const Tensor<T>&);                                  \
  template Tensor<T> mean(const Tensor<T>&, std::size_t);                     \
  template Tensor<T> sum(const Tensor<T>&);                                   \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&,               \
                            const Tensor<T>&, std::size_t, std::size_t,       \
                            std::size_t);                                     \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const int>,    \
                                   int);                                      \
  template void backward(const Tensor<T>&);

AUDAPT_INSTANTIATE(float)
AUDAPT_INSTANTIATE(double)

#undef AUDAPT_INSTANTIATE

}  // namespace audapt
