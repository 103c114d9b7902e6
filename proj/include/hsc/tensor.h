// Copyright 2026 The HSC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HSC_TENSOR_H_
#define HSC_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsc/error.h"

namespace hsc {

using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Tape recording is on by default; NoGradGuard turns it off for the current
// thread, which is how inference paths avoid building graphs.
bool GradEnabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace internal {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  bool released = false;  // interior node whose tape was consumed
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  // Zero-filled on first use.
  std::span<T> GradBuffer() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

}  // namespace internal

// Dense row-major array that optionally participates in reverse-mode
// differentiation. Copies share storage (handle semantics); use Clone() for
// a deep copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodeType = internal::Node<T>;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  static Tensor FromScalar(T v) { return Tensor(Shape{}, std::vector<T>{v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  // Negative axes count from the end.
  int64_t dim(int axis) const;
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }

  std::span<const T> values() const { return node_->value; }
  std::span<T> mutable_values() { return node_->value; }
  T operator[](int64_t i) const { return node_->value[i]; }
  T item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const { return node_->inputs.empty() && !node_->released; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->GradBuffer(); }
  void ZeroGrad();

  // Reverse sweep from a scalar output (seed 1) or with an explicit seed of
  // the same size as this tensor. The interior tape is released afterwards;
  // a second sweep over the same graph is rejected.
  void Backward();
  void Backward(std::span<const T> seed);

  Tensor Detach() const;
  Tensor Clone() const;

  NodeType* node() const { return node_.get(); }
  const std::shared_ptr<NodeType>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<NodeType> node) : node_(std::move(node)) {}
  template <typename U>
  friend Tensor<U> MakeOpResult(std::string_view, Shape, std::vector<U>,
                                const std::vector<Tensor<U>>&,
                                std::function<void(internal::Node<U>&)>);

  std::shared_ptr<NodeType> node_;
};

// Builds the output of a differentiable primitive. Rejects non-finite
// values. The backward closure is attached only when recording is enabled
// and some input requires a gradient; it receives the output node (whose
// grad is populated) and must accumulate into node.inputs[k]->GradBuffer()
// for inputs with requires_grad set.
template <typename T>
Tensor<T> MakeOpResult(std::string_view op, Shape shape, std::vector<T> values,
                       const std::vector<Tensor<T>>& inputs,
                       std::function<void(internal::Node<T>&)> backward);

template <typename T>
bool AllFinite(std::span<const T> v);

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace hsc

#endif  // HSC_TENSOR_H_
