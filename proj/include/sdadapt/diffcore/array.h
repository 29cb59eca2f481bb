// diffcore/array.h

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

#ifndef SDADAPT_DIFFCORE_ARRAY_H_
#define SDADAPT_DIFFCORE_ARRAY_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sdadapt {

using Shape = std::vector<std::size_t>;

std::size_t ShapeSize(const Shape& shape);
std::string ShapeString(const Shape& shape);

namespace detail {
struct Node;
}  // namespace detail

/// Dense row-major float64 array that can take part in reverse-mode
/// differentiation. DiffArray is a shared handle: copies alias the same
/// storage and graph node, which is how parameters are shared between a
/// model, an adapter bank and the optimizer.
///
/// Leaves are created with the factory functions below. Every operation in
/// ops.h returns a new non-leaf node that remembers its inputs when any of
/// them requires a gradient.
class DiffArray {
 public:
  DiffArray() = default;

  static DiffArray Zeros(Shape shape, bool requires_grad = false);
  static DiffArray Filled(Shape shape, double value, bool requires_grad = false);
  static DiffArray FromData(Shape shape, std::vector<double> data,
                            bool requires_grad = false);
  static DiffArray Scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const double> data() const;
  // Writable view of the values. Only meaningful on leaves; mutating a
  // non-leaf does not propagate anywhere.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const { return data()[i]; }
  double at(std::size_t r, std::size_t c) const { return data()[r * dim(1) + c]; }

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool is_leaf() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();
  // Releases the gradient buffer so has_grad() is false until the next
  // backward sweep reaches this leaf.
  void clear_grad();

  /// Reverse sweep from this scalar root. Leaf gradients accumulate (call
  /// zero_grad between independent steps); intermediate gradients are reset
  /// at the start of each sweep.
  void Backward() const;

  /// Deep copy of the values into a fresh leaf (no graph, no grad).
  DiffArray Clone(bool requires_grad) const;

  /// Identity of the underlying node; used by the tape and by tests that
  /// check aliasing.
  const detail::Node* node() const { return node_.get(); }

 private:
  explicit DiffArray(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend DiffArray MakeOp(Shape, std::vector<double>, std::vector<DiffArray>,
                          std::function<void(std::span<const double>,
                                             std::span<const std::span<double>>)>);
  friend class ComputeTape;
};

/// Backward rule of an operation: receives the gradient of the output and
/// one gradient buffer per input, in input order. A buffer is empty when the
/// corresponding input does not require a gradient; rules must accumulate
/// (+=), never assign.
using BackwardRule = std::function<void(std::span<const double> out_grad,
                                        std::span<const std::span<double>> in_grads)>;

/// Records an operation result. The rule is kept only when some input
/// requires a gradient. Throws NumericError when `value` holds NaN/Inf.
DiffArray MakeOp(Shape shape, std::vector<double> value,
                 std::vector<DiffArray> inputs, BackwardRule rule);

/// Topologically ordered list of the recorded operations reachable from a
/// root, restricted to nodes that need a gradient.
class ComputeTape {
 public:
  explicit ComputeTape(const DiffArray& root);

  std::size_t size() const { return order_.size(); }
  // Runs every backward rule once, root first.
  void Run(const DiffArray& root) const;
  // Inputs precede outputs in the recorded order.
  bool IsTopologicallyOrdered() const;

 private:
  std::vector<detail::Node*> order_;
};

}  // namespace sdadapt

#endif  // SDADAPT_DIFFCORE_ARRAY_H_
