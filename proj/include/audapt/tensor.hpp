// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode automatic differentiation over dense row-major tensors.
//
// A Tensor is a shared handle to a node holding its value, an optional
// gradient buffer and, when it was produced by an op while gradients are
// being recorded, the parent nodes and a backward rule. Calling backward() on
// a scalar walks the recorded graph in reverse topological order.
//
// The engine is templated on the scalar type: float is used for training,
// double for gradient checking.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace audapt {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  bool is_leaf() const { return parents.empty(); }
  T* grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad.data();
  }
};

template <typename T>
class Tensor {
 public:
  using Node = TensorNode<T>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> data,
                     bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<const T> data() const { return node_->data; }
  // Direct write access, meant for leaves (parameter updates, initialization).
  std::span<T> mutable_data() { return node_->data; }
  T item() const;
  T at(std::size_t r, std::size_t c) const {
    return node_->data[r * node_->shape.back() + c];
  }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return {node_->grad_buffer(), numel()}; }
  void zero_grad() { node_->grad.clear(); }

  // New leaf sharing no graph history with this tensor.
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Value large enough in magnitude to zero a softmax entry, small enough to
// stay finite in float32.
inline constexpr double kMaskedLogit = -1e9;

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// Elementwise, or b broadcast as a row vector over the rows of a.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> transpose(const Tensor<T>& a);
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
// Half-open range [begin, end) along axis 0 or 1 of a rank-2 tensor.
template <typename T>
Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t begin,
                std::size_t end);
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const int> ids);
template <typename T> Tensor<T> softmax(const Tensor<T>& a, std::size_t axis);
// Sets entries above the diagonal of a square-or-wider matrix to kMaskedLogit.
template <typename T> Tensor<T> causal_mask(const Tensor<T>& a);
// Normalizes each row to zero mean and unit variance; no affine part.
template <typename T> Tensor<T> layer_norm(const Tensor<T>& a, T eps);
template <typename T> Tensor<T> gelu(const Tensor<T>& a);
// Reduces the given axis; a rank-1 input reduces to a scalar.
template <typename T> Tensor<T> mean(const Tensor<T>& a, std::size_t axis);
template <typename T> Tensor<T> sum(const Tensor<T>& a);
// x: [time x in_ch]; weight: [kernel*in_ch x out_ch], row = tap*in_ch + ch;
// bias: [out_ch]. Output rows = (time + 2*pad - kernel) / stride + 1.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, std::size_t kernel, std::size_t stride,
                 std::size_t pad);
// Mean negative log-likelihood over positions whose target != ignore_index.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> targets,
                        int ignore_index = -100);

template <typename T> void backward(const Tensor<T>& root);

}  // namespace audapt
