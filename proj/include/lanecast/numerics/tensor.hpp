// Copyright 2026 The Lanecast Authors
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

#ifndef LANECAST__NUMERICS__TENSOR_HPP_
#define LANECAST__NUMERICS__TENSOR_HPP_

#include "lanecast/errors.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace lanecast::nn
{

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape & shape)
{
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string to_string(const Shape & shape)
{
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out += (i ? "," : "") + std::to_string(shape[i]);
  }
  return out + "]";
}

/// One value on the gradient tape. Interior nodes own their parents and a closure
/// that pushes `grad` into the parents' grads.
struct TensorNode
{
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad{false};
  bool leaf{true};
  bool has_grad{false};
  bool consumed{false};
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode &)> backward_fn;

  void ensure_grad()
  {
    if (grad.size() != value.size()) {
      grad.assign(value.size(), 0.0);
    }
  }
};

/// Gradient recording is on by default; switched off per thread by NoGradGuard.
inline bool & grad_mode()
{
  thread_local bool enabled = true;
  return enabled;
}

class NoGradGuard
{
public:
  NoGradGuard() : previous_(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard & operator=(const NoGradGuard &) = delete;

private:
  bool previous_;
};

class Tensor
{
public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false)
  {
    if (values.size() != nn::numel(shape)) {
      throw ShapeMismatch(
        "tensor of shape " + to_string(shape) + " given " + std::to_string(values.size()) +
        " values");
    }
    for (auto d : shape) {
      if (d == 0) {
        throw ShapeMismatch("tensor dimensions must be positive, got " + to_string(shape));
      }
    }
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor full(Shape shape, double v, bool requires_grad = false)
  {
    const std::size_t n = nn::numel(shape);
    return from_values(std::move(shape), std::vector<double>(n, v), requires_grad);
  }

  static Tensor zeros(Shape shape, bool requires_grad = false)
  {
    return full(std::move(shape), 0.0, requires_grad);
  }

  static Tensor scalar(double v, bool requires_grad = false) { return from_values({1}, {v}, requires_grad); }

  bool defined() const { return static_cast<bool>(node_); }
  const std::shared_ptr<TensorNode> & node() const { return node_; }

  const Shape & shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }

  const std::vector<double> & values() const { return node_->value; }
  // Direct write access; only meaningful on leaves (weights, inputs).
  std::vector<double> & mutable_values() { return node_->value; }
  double operator[](std::size_t i) const { return node_->value[i]; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->has_grad; }
  const std::vector<double> & grad() const
  {
    node_->ensure_grad();
    return node_->grad;
  }
  std::vector<double> & mutable_grad()
  {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad()
  {
    if (!node_->grad.empty()) {
      std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }
    node_->has_grad = false;
  }

  double item() const
  {
    if (numel() != 1) {
      throw ShapeMismatch("item() on tensor of shape " + to_string(shape()));
    }
    return node_->value[0];
  }

  /// Same values, cut from the tape.
  Tensor detach() const { return from_values(shape(), values(), false); }

private:
  std::shared_ptr<TensorNode> node_;
};

/// Reverse-mode sweep from a scalar loss. Accumulates into the grads of every leaf that
/// requires grad, then releases the graph; a second sweep over it throws StaleTape.
inline void backward(const Tensor & loss)
{
  const auto & root = loss.node();
  if (root->value.size() != 1) {
    throw NonScalarLoss("backward() needs a scalar loss, got shape " + to_string(root->shape));
  }
  if (root->consumed) {
    throw StaleTape("backward() called twice on the same graph");
  }
  if (!root->requires_grad) {
    root->consumed = true;
    return;
  }

  // Iterative post-order DFS yields a topological order.
  std::vector<TensorNode *> order;
  std::unordered_set<TensorNode *> visited;
  std::vector<std::pair<TensorNode *, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto & [node, next] = stack.back();
    if (node->consumed) {
      throw StaleTape("graph segment was already released by a previous backward()");
    }
    if (next < node->parents.size()) {
      TensorNode * parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  for (auto * node : order) {
    if (!node->leaf) {
      node->grad.assign(node->value.size(), 0.0);
    }
  }
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode * node = *it;
    if (node->leaf) {
      node->has_grad = true;
    } else if (node->backward_fn) {
      node->backward_fn(*node);
    }
  }
  for (auto * node : order) {
    if (!node->leaf) {
      node->backward_fn = nullptr;
      node->parents.clear();
      node->grad.clear();
      node->grad.shrink_to_fit();
      node->consumed = true;
    }
  }
}

}  // namespace lanecast::nn

#endif  // LANECAST__NUMERICS__TENSOR_HPP_
