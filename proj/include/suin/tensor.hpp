// Copyright 2026 The SUIN Authors
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace suin {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

// One value in the differentiation graph. Interior nodes keep their parents
// alive and know how to push their gradient back into them.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until backward reaches the node
  bool requires_grad = false;
  bool leaf = true;
  bool consumed = false;  // interior node already backpropagated
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad();
};

}  // namespace detail

// Dense row-major float64 tensor with reverse-mode differentiation.
//
// Tensors are handles: copies share the underlying node. Leaves created with
// requires_grad=true accumulate gradients across backward calls until
// zero_grad(); an interior graph can be backpropagated once, a second
// backward through any of its interior nodes raises GraphError.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim() const { return shape().size(); }
  std::size_t size(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // In-place access is reserved for leaves (parameter updates, initializers).
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  // Scalar outputs only. Visits every reachable node once, in reverse
  // topological order.
  void backward() const;

  // New leaf holding a copy of the values, detached from any graph.
  Tensor detach() const;

  const detail::Node* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_op_result(Shape, std::vector<double>, std::vector<Tensor>,
                               std::function<void(detail::Node&)>);
  friend std::shared_ptr<detail::Node> node_of(const Tensor&);
};

// Builds an interior node. The backward function is dropped when no parent
// requires a gradient.
Tensor make_op_result(Shape shape, std::vector<double> data,
                      std::vector<Tensor> parents,
                      std::function<void(detail::Node&)> backward_fn);
std::shared_ptr<detail::Node> node_of(const Tensor& t);

// Matrix product. A 1-D left operand is treated as a row vector and a 1-D
// right operand as a column vector; the promoted axis is dropped again.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);

// Softmax restricted to positions where mask is true; the rest are exactly 0.
Tensor softmax_masked(const Tensor& logits, const std::vector<bool>& mask);
// Row-wise masked softmax over an [n x m] matrix with an n*m row-major mask.
Tensor softmax_rows_masked(const Tensor& logits, const std::vector<bool>& mask);

// Row lookup into a [v x d] table. Backward scatter-adds into the table.
Tensor gather_rows(const Tensor& table, std::span<const std::int64_t> indices);

Tensor concat(std::span<const Tensor> parts, std::size_t axis = 0);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis = 0);
// Stacks equal-length vectors into a [count x d] matrix.
Tensor stack_rows(std::span<const Tensor> rows);
Tensor reduce_sum(const Tensor& a);
Tensor mean(const Tensor& a);
// [n x m] -> [n], summing each row.
Tensor row_sums(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose(const Tensor& a);
// [d] -> [n x d], repeating the vector.
Tensor expand_rows(const Tensor& row, std::size_t n);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor row(const Tensor& a, std::size_t index);

// Mean binary cross-entropy; predictions are clamped to [eps, 1 - eps].
inline constexpr double kProbabilityClamp = 1e-12;
Tensor bce_loss(const Tensor& predictions, std::span<const double> labels);

}  // namespace suin
