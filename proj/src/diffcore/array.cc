// diffcore/array.cc

// Copyright 2026  The sdadapt Authors

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

#include "sdadapt/diffcore/array.h"

#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "sdadapt/base/error.h"

namespace sdadapt {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardRule rule;

  bool is_leaf() const { return !rule; }
  void EnsureGrad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

using detail::Node;

std::size_t ShapeSize(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void CheckFinite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + what);
  }
}

std::shared_ptr<Node> NewLeaf(Shape shape, std::vector<double> data, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("zero-length axis in shape " + ShapeString(shape));
  }
  if (data.size() != ShapeSize(shape)) {
    throw DimensionError("data length " + std::to_string(data.size()) +
                         " does not match shape " + ShapeString(shape));
  }
  CheckFinite(data, "leaf data");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

DiffArray DiffArray::Zeros(Shape shape, bool requires_grad) {
  std::size_t n = ShapeSize(shape);
  return DiffArray(NewLeaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

DiffArray DiffArray::Filled(Shape shape, double value, bool requires_grad) {
  std::size_t n = ShapeSize(shape);
  return DiffArray(NewLeaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

DiffArray DiffArray::FromData(Shape shape, std::vector<double> data, bool requires_grad) {
  return DiffArray(NewLeaf(std::move(shape), std::move(data), requires_grad));
}

DiffArray DiffArray::Scalar(double value, bool requires_grad) {
  return FromData({1}, {value}, requires_grad);
}

const Shape& DiffArray::shape() const {
  if (!node_) throw UsageError("use of undefined DiffArray");
  return node_->shape;
}

std::size_t DiffArray::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + ShapeString(s));
  }
  return s[axis];
}

std::size_t DiffArray::size() const { return ShapeSize(shape()); }

std::span<const double> DiffArray::data() const {
  if (!node_) throw UsageError("use of undefined DiffArray");
  return node_->value;
}

std::span<double> DiffArray::mutable_data() {
  if (!node_) throw UsageError("use of undefined DiffArray");
  return node_->value;
}

double DiffArray::item() const {
  if (size() != 1) throw DimensionError("item() on array of shape " + ShapeString(shape()));
  return node_->value[0];
}

bool DiffArray::requires_grad() const { return node_ && node_->requires_grad; }

void DiffArray::set_requires_grad(bool value) {
  if (!node_) throw UsageError("use of undefined DiffArray");
  if (!node_->is_leaf()) throw UsageError("requires_grad can only be changed on leaves");
  node_->requires_grad = value;
}

bool DiffArray::is_leaf() const { return node_ && node_->is_leaf(); }

bool DiffArray::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> DiffArray::grad() const {
  if (!has_grad()) throw UsageError("array has no gradient");
  return node_->grad;
}

std::span<double> DiffArray::mutable_grad() {
  if (!node_) throw UsageError("use of undefined DiffArray");
  node_->EnsureGrad();
  return node_->grad;
}

void DiffArray::zero_grad() {
  if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void DiffArray::clear_grad() {
  if (node_) std::vector<double>().swap(node_->grad);
}

void DiffArray::Backward() const {
  if (!node_) throw UsageError("backward on undefined DiffArray");
  if (size() != 1) {
    throw UsageError("backward requires a scalar root, got shape " + ShapeString(shape()));
  }
  if (!node_->requires_grad) return;
  ComputeTape tape(*this);
  tape.Run(*this);
}

DiffArray DiffArray::Clone(bool requires_grad) const {
  return FromData(shape(), std::vector<double>(data().begin(), data().end()), requires_grad);
}

DiffArray MakeOp(Shape shape, std::vector<double> value, std::vector<DiffArray> inputs,
                 BackwardRule rule) {
  if (value.size() != ShapeSize(shape)) {
    throw DimensionError("op result length does not match shape " + ShapeString(shape));
  }
  CheckFinite(value, "op result");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  for (const DiffArray& in : inputs) {
    if (in.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (DiffArray& in : inputs) node->inputs.push_back(std::move(in.node_));
    node->rule = std::move(rule);
  }
  return DiffArray(std::move(node));
}

ComputeTape::ComputeTape(const DiffArray& root) {
  if (!root.defined()) throw UsageError("tape over undefined root");
  // Iterative post-order DFS; the visit order is fixed by input order, so
  // two tapes over identical graphs are identical.
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  Node* r = root.node_.get();
  if (!r->requires_grad) return;
  stack.emplace_back(r, 0);
  seen.insert(r);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

void ComputeTape::Run(const DiffArray& root) const {
  if (order_.empty()) return;
  for (Node* n : order_) {
    if (n->is_leaf()) {
      n->EnsureGrad();
    } else {
      n->grad.assign(n->value.size(), 0.0);
    }
  }
  Node* r = root.node_.get();
  r->grad[0] += 1.0;
  std::vector<std::span<double>> in_grads;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    Node* n = *it;
    if (n->is_leaf()) continue;
    in_grads.clear();
    for (const auto& in : n->inputs) {
      in_grads.push_back(in->requires_grad ? std::span<double>(in->grad) : std::span<double>());
    }
    n->rule(n->grad, in_grads);
  }
  for (Node* n : order_) {
    if (n->is_leaf()) CheckFinite(n->grad, "leaf gradient");
  }
}

bool ComputeTape::IsTopologicallyOrdered() const {
  std::unordered_set<const Node*> placed;
  for (const Node* n : order_) {
    for (const auto& in : n->inputs) {
      if (in->requires_grad && !placed.count(in.get())) return false;
    }
    placed.insert(n);
  }
  return true;
}

}  // namespace sdadapt
