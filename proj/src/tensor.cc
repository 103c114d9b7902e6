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

#include "hsc/tensor.h"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace hsc {
namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    Check(d >= 0, ErrorKind::kShape, "negative dimension in shape");
    n *= d;
  }
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

bool GradEnabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
bool AllFinite(std::span<const T> v) {
  for (T x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : node_(std::make_shared<NodeType>()) {
  node_->value.assign(NumElements(shape), fill);
  node_->shape = std::move(shape);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values)
    : node_(std::make_shared<NodeType>()) {
  Check(NumElements(shape) == static_cast<int64_t>(values.size()),
        ErrorKind::kShape,
        "data length " + std::to_string(values.size()) +
            " does not match shape " + ShapeString(shape));
  node_->shape = std::move(shape);
  node_->value = std::move(values);
}

template <typename T>
int64_t Tensor<T>::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  Check(axis >= 0 && axis < r, ErrorKind::kShape,
        "axis out of range for shape " + ShapeString(shape()));
  return node_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
  Check(size() == 1, ErrorKind::kShape,
        "item() on tensor of shape " + ShapeString(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
  Check(is_leaf(), ErrorKind::kUsage,
        "requires_grad can only be toggled on leaf tensors");
  node_->requires_grad = on;
  return *this;
}

template <typename T>
void Tensor<T>::ZeroGrad() {
  if (node_) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
void Tensor<T>::Backward() {
  Check(size() == 1, ErrorKind::kShape,
        "Backward() without a seed needs a scalar output, got " +
            ShapeString(shape()));
  const T one = T(1);
  Backward(std::span<const T>(&one, 1));
}

template <typename T>
void Tensor<T>::Backward(std::span<const T> seed) {
  Check(defined(), ErrorKind::kUsage, "Backward() on an undefined tensor");
  Check(!node_->released, ErrorKind::kUsage,
        "graph already consumed by a previous Backward()");
  Check(node_->requires_grad, ErrorKind::kUsage,
        "Backward() on a tensor that does not require grad");
  Check(static_cast<int64_t>(seed.size()) == size(), ErrorKind::kShape,
        "seed size does not match output");

  // Iterative post-order DFS gives a topological order.
  std::vector<NodeType*> order;
  std::unordered_set<NodeType*> seen;
  std::vector<std::pair<NodeType*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      NodeType* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  auto g = node_->GradBuffer();
  for (size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeType* n = *it;
    if (n->backward) {
      n->backward(*n);
      if (!AllFinite<T>(std::span<const T>(n->grad))) {
        Fail(ErrorKind::kNumerical, "non-finite gradient during backward");
      }
    }
  }
  for (NodeType* n : order) {
    if (n->backward) {
      n->backward = nullptr;
      n->inputs.clear();
      n->released = true;
      if (n != node_.get()) std::vector<T>().swap(n->grad);
    }
  }
}

template <typename T>
Tensor<T> Tensor<T>::Detach() const {
  return Tensor(node_->shape, node_->value);
}

template <typename T>
Tensor<T> Tensor<T>::Clone() const {
  Tensor out(node_->shape, node_->value);
  out.node_->requires_grad = is_leaf() && node_->requires_grad;
  return out;
}

template <typename T>
Tensor<T> MakeOpResult(std::string_view op, Shape shape, std::vector<T> values,
                       const std::vector<Tensor<T>>& inputs,
                       std::function<void(internal::Node<T>&)> backward) {
  Check(NumElements(shape) == static_cast<int64_t>(values.size()),
        ErrorKind::kShape, std::string(op) + ": output size mismatch");
  if (!AllFinite<T>(values)) {
    Fail(ErrorKind::kNumerical, std::string(op) + ": non-finite output");
  }
  auto node = std::make_shared<internal::Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  bool track = false;
  if (GradEnabled()) {
    for (const auto& in : inputs) track = track || in.requires_grad();
  }
  if (track && backward) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

template class Tensor<float>;
template class Tensor<double>;
template bool AllFinite<float>(std::span<const float>);
template bool AllFinite<double>(std::span<const double>);
template Tensor<float> MakeOpResult<float>(
    std::string_view, Shape, std::vector<float>,
    const std::vector<Tensor<float>>&,
    std::function<void(internal::Node<float>&)>);
template Tensor<double> MakeOpResult<double>(
    std::string_view, Shape, std::vector<double>,
    const std::vector<Tensor<double>>&,
    std::function<void(internal::Node<double>&)>);

}  // namespace hsc
