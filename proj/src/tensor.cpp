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

#include "suin/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "suin/errors.hpp"

namespace suin {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

namespace detail {

std::vector<double>& Node::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

}  // namespace detail

using detail::Node;

namespace {

std::shared_ptr<Node> new_leaf(Shape shape, std::vector<double> data,
                               bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return node;
}

const Node& checked(const std::shared_ptr<Node>& n) {
  if (!n) throw Error("use of an undefined tensor");
  return *n;
}

void accumulate(Node& parent, std::span<const double> g) {
  if (!parent.requires_grad) return;
  auto& pg = parent.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

void require_2d(const Tensor& a, const char* op) {
  if (a.dim() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_str(a.shape()));
  }
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(new_leaf(std::move(shape), std::vector<double>(n, 0.0),
                         requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(new_leaf(std::move(shape), std::vector<double>(n, value),
                         requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  return Tensor(new_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(new_leaf({}, {value}, requires_grad));
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const auto n = values.size();
  return Tensor(new_leaf({n}, std::move(values), requires_grad));
}

const Shape& Tensor::shape() const { return checked(node_).shape; }

std::size_t Tensor::size(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return checked(node_).data.size(); }

std::span<const double> Tensor::data() const { return checked(node_).data; }

std::span<double> Tensor::mutable_data() {
  checked(node_);
  if (!node_->leaf) throw GraphError("in-place write to a non-leaf tensor");
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  }
  return node_->data[0];
}

double Tensor::at(std::size_t i) const {
  if (i >= numel()) throw IndexError("flat index " + std::to_string(i) + " out of range");
  return node_->data[i];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  if (dim() != 2 || i >= shape()[0] || j >= shape()[1]) {
    throw IndexError("index (" + std::to_string(i) + "," + std::to_string(j) +
                     ") out of range for " + shape_str(shape()));
  }
  return node_->data[i * shape()[1] + j];
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  checked(node_);
  if (!node_->leaf) throw GraphError("requires_grad can only be set on leaves");
  node_->requires_grad = flag;
  if (!flag) node_->grad.clear();
}

bool Tensor::is_leaf() const { return checked(node_).leaf; }

bool Tensor::has_grad() const { return !checked(node_).grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw GraphError("tensor has no gradient");
  return node_->grad;
}

void Tensor::zero_grad() {
  checked(node_);
  node_->grad.clear();
}

void Tensor::backward() const {
  checked(node_);
  if (numel() != 1) {
    throw GraphError("backward() requires a scalar output, got " +
                     shape_str(shape()));
  }
  if (!node_->requires_grad) {
    throw GraphError("backward() on a tensor that does not require grad");
  }

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (!n->leaf && n->consumed) {
      throw GraphError("backward() already ran through this graph");
    }
  }

  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->leaf) continue;
    n->ensure_grad();
    if (n->backward_fn) n->backward_fn(*n);
    n->consumed = true;
  }
}

Tensor Tensor::detach() const {
  return Tensor(new_leaf(shape(), node_->data, false));
}

Tensor make_op_result(Shape shape, std::vector<double> data,
                      std::vector<Tensor> parents,
                      std::function<void(Node&)> backward_fn) {
  auto node = new_leaf(std::move(shape), std::move(data), false);
  node->leaf = false;
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const Tensor& p) { return p.requires_grad(); });
  if (any) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node_);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

std::shared_ptr<Node> node_of(const Tensor& t) { return t.node_; }

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a_in, const Tensor& b_in) {
  const bool a_vec = a_in.dim() == 1;
  const bool b_vec = b_in.dim() == 1;
  if (!(a_vec || a_in.dim() == 2) || !(b_vec || b_in.dim() == 2)) {
    throw DimensionError("matmul: unsupported shapes " + shape_str(a_in.shape()) +
                         " and " + shape_str(b_in.shape()));
  }
  const std::size_t m = a_vec ? 1 : a_in.size(0);
  const std::size_t k = a_vec ? a_in.size(0) : a_in.size(1);
  const std::size_t kb = b_in.size(0);
  const std::size_t n = b_vec ? 1 : b_in.size(1);
  if (k != kb) {
    throw DimensionError("matmul: inner dimensions differ for " +
                         shape_str(a_in.shape()) + " and " +
                         shape_str(b_in.shape()));
  }
  auto an = node_of(a_in);
  auto bn = node_of(b_in);
  const double* A = an->data.data();
  const double* B = bn->data.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  Shape shape;
  if (!a_vec) shape.push_back(m);
  if (!b_vec) shape.push_back(n);
  return make_op_result(shape, std::move(out), {a_in, b_in},
                        [an, bn, m, k, n](Node& self) {
    const double* G = self.grad.data();
    if (an->requires_grad) {
      auto& ga = an->ensure_grad();
      const double* B = bn->data.data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = B + p * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (bn->requires_grad) {
      auto& gb = bn->ensure_grad();
      const double* A = an->data.data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          if (av == 0.0) continue;
          double* gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto an = node_of(a), bn = node_of(b);
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an->data[i] + bn->data[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
    accumulate(*an, self.grad);
    accumulate(*bn, self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto an = node_of(a), bn = node_of(b);
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an->data[i] - bn->data[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
    accumulate(*an, self.grad);
    if (bn->requires_grad) {
      auto& g = bn->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto an = node_of(a), bn = node_of(b);
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an->data[i] * bn->data[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) {
      auto& g = an->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn->data[i];
    }
    if (bn->requires_grad) {
      auto& g = bn->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an->data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  auto an = node_of(a);
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an->data[i] * factor;
  return make_op_result(a.shape(), std::move(out), {a}, [an, factor](Node& self) {
    auto& g = an->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

Tensor relu(const Tensor& a) {
  auto an = node_of(a);
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, an->data[i]);
  return make_op_result(a.shape(), std::move(out), {a}, [an](Node& self) {
    auto& g = an->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (an->data[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  auto an = node_of(a);
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = an->data[i];
    // Split by sign so exp never overflows.
    if (x >= 0) {
      out[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      out[i] = e / (1.0 + e);
    }
  }
  return make_op_result(a.shape(), std::move(out), {a}, [an](Node& self) {
    auto& g = an->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = self.data[i];
      g[i] += self.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor exp(const Tensor& a) {
  auto an = node_of(a);
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(an->data[i]);
  return make_op_result(a.shape(), std::move(out), {a}, [an](Node& self) {
    auto& g = an->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.data[i];
  });
}

Tensor log(const Tensor& a) {
  auto an = node_of(a);
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = an->data[i];
    if (!(x > 0.0)) {
      throw NumericDomainError("log of non-positive value " + std::to_string(x) +
                               " at flat index " + std::to_string(i));
    }
    out[i] = std::log(x);
  }
  return make_op_result(a.shape(), std::move(out), {a}, [an](Node& self) {
    auto& g = an->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / an->data[i];
  });
}

// ---------------------------------------------------------------------------
// Softmax

namespace {

// Forward for one row; masked entries are excluded rather than set to -inf.
bool masked_softmax_row(const double* x, const std::vector<bool>& mask,
                        std::size_t offset, std::size_t n, double* out) {
  double mx = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[offset + i]) {
      mx = std::max(mx, x[i]);
      any = true;
    }
  }
  if (!any) return false;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[offset + i]) {
      out[i] = std::exp(x[i] - mx);
      total += out[i];
    } else {
      out[i] = 0.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= total;
  return true;
}

// d logits_i = y_i * (g_i - sum_j g_j y_j); masked y_j = 0 drop out naturally.
void masked_softmax_row_backward(const double* y, const double* gy,
                                 std::size_t n, double* gx) {
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += gy[i] * y[i];
  for (std::size_t i = 0; i < n; ++i) gx[i] += y[i] * (gy[i] - dot);
}

}  // namespace

Tensor softmax_masked(const Tensor& logits, const std::vector<bool>& mask) {
  if (logits.dim() != 1) {
    throw DimensionError("softmax_masked: expected a vector, got " +
                         shape_str(logits.shape()));
  }
  const std::size_t n = logits.size(0);
  if (mask.size() != n) {
    throw DimensionError("softmax_masked: mask length " + std::to_string(mask.size()) +
                         " vs logits " + shape_str(logits.shape()));
  }
  auto ln = node_of(logits);
  std::vector<double> out(n);
  if (!masked_softmax_row(ln->data.data(), mask, 0, n, out.data())) {
    throw EmptyAttentionError("softmax over a fully masked input");
  }
  return make_op_result(logits.shape(), std::move(out), {logits},
                        [ln, n](Node& self) {
    auto& g = ln->ensure_grad();
    masked_softmax_row_backward(self.data.data(), self.grad.data(), n, g.data());
  });
}

Tensor softmax_rows_masked(const Tensor& logits, const std::vector<bool>& mask) {
  require_2d(logits, "softmax_rows_masked");
  const std::size_t rows = logits.size(0), cols = logits.size(1);
  if (mask.size() != rows * cols) {
    throw DimensionError("softmax_rows_masked: mask length " +
                         std::to_string(mask.size()) + " vs logits " +
                         shape_str(logits.shape()));
  }
  auto ln = node_of(logits);
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!masked_softmax_row(ln->data.data() + r * cols, mask, r * cols, cols,
                            out.data() + r * cols)) {
      throw EmptyAttentionError("softmax row " + std::to_string(r) +
                                " is fully masked");
    }
  }
  return make_op_result(logits.shape(), std::move(out), {logits},
                        [ln, rows, cols](Node& self) {
    auto& g = ln->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      masked_softmax_row_backward(self.data.data() + r * cols,
                                  self.grad.data() + r * cols, cols,
                                  g.data() + r * cols);
    }
  });
}

// ---------------------------------------------------------------------------
// Indexing and shape

Tensor gather_rows(const Tensor& table, std::span<const std::int64_t> indices) {
  require_2d(table, "gather_rows");
  const std::size_t v = table.size(0), d = table.size(1);
  for (auto idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= v) {
      throw IndexError("gather_rows: index " + std::to_string(idx) +
                       " out of range for table with " + std::to_string(v) +
                       " rows");
    }
  }
  auto tn = node_of(table);
  std::vector<double> out(indices.size() * d);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::copy_n(tn->data.data() + static_cast<std::size_t>(indices[r]) * d, d,
                out.data() + r * d);
  }
  std::vector<std::int64_t> idx(indices.begin(), indices.end());
  return make_op_result({indices.size(), d}, std::move(out), {table},
                        [tn, idx = std::move(idx), d](Node& self) {
    auto& g = tn->ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double* dst = g.data() + static_cast<std::size_t>(idx[r]) * d;
      const double* src = self.grad.data() + r * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const std::size_t rank = parts[0].dim();
  if (rank == 0 || rank > 2 || axis >= rank) {
    throw DimensionError("concat: unsupported axis " + std::to_string(axis) +
                         " for " + shape_str(parts[0].shape()));
  }
  for (const auto& p : parts) {
    if (p.dim() != rank) {
      throw DimensionError("concat: rank mismatch " + shape_str(parts[0].shape()) +
                           " vs " + shape_str(p.shape()));
    }
    for (std::size_t ax = 0; ax < rank; ++ax) {
      if (ax != axis && p.size(ax) != parts[0].size(ax)) {
        throw DimensionError("concat: incompatible shapes " +
                             shape_str(parts[0].shape()) + " and " +
                             shape_str(p.shape()));
      }
    }
  }
  std::vector<std::shared_ptr<Node>> nodes;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    nodes.push_back(node_of(p));
    widths.push_back(p.size(axis));
    total += p.size(axis);
  }
  Shape shape = parts[0].shape();
  shape[axis] = total;
  // Rows of the output are made of contiguous chunks, one per part.
  const std::size_t outer = (rank == 2 && axis == 1) ? shape[0] : 1;
  const std::size_t inner = (rank == 2 && axis == 0) ? shape[1] : 1;
  std::vector<double> out;
  out.reserve(shape_numel(shape));
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t p = 0; p < nodes.size(); ++p) {
      const std::size_t chunk = widths[p] * inner;
      const double* src = nodes[p]->data.data() + o * chunk;
      out.insert(out.end(), src, src + chunk);
    }
  }
  return make_op_result(shape, std::move(out), {parts.begin(), parts.end()},
                        [nodes, widths, outer, inner](Node& self) {
    std::size_t offset = 0;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t p = 0; p < nodes.size(); ++p) {
        const std::size_t chunk = widths[p] * inner;
        if (nodes[p]->requires_grad) {
          auto& g = nodes[p]->ensure_grad();
          for (std::size_t j = 0; j < chunk; ++j) {
            g[o * chunk + j] += self.grad[offset + j];
          }
        }
        offset += chunk;
      }
    }
  });
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no inputs");
  const std::size_t d = rows[0].numel();
  std::vector<std::shared_ptr<Node>> nodes;
  std::vector<double> out;
  out.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (r.dim() != 1 || r.numel() != d) {
      throw DimensionError("stack_rows: expected vectors of length " +
                           std::to_string(d) + ", got " + shape_str(r.shape()));
    }
    auto n = node_of(r);
    out.insert(out.end(), n->data.begin(), n->data.end());
    nodes.push_back(std::move(n));
  }
  return make_op_result({rows.size(), d}, std::move(out),
                        {rows.begin(), rows.end()}, [nodes, d](Node& self) {
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      if (!nodes[r]->requires_grad) continue;
      auto& g = nodes[r]->ensure_grad();
      for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[r * d + j];
    }
  });
}

Tensor reduce_sum(const Tensor& a) {
  auto an = node_of(a);
  double s = 0.0;
  for (double x : an->data) s += x;
  return make_op_result({}, {s}, {a}, [an](Node& self) {
    auto& g = an->ensure_grad();
    for (auto& gi : g) gi += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  const std::size_t n = a.numel();
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(reduce_sum(a), 1.0 / static_cast<double>(n));
}

Tensor row_sums(const Tensor& a) {
  require_2d(a, "row_sums");
  const std::size_t rows = a.size(0), cols = a.size(1);
  auto an = node_of(a);
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r] += an->data[r * cols + c];
  }
  return make_op_result({rows}, std::move(out), {a}, [an, rows, cols](Node& self) {
    auto& g = an->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[r];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                         shape_str(shape));
  }
  auto an = node_of(a);
  return make_op_result(std::move(shape), an->data, {a}, [an](Node& self) {
    accumulate(*an, self.grad);
  });
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  const std::size_t m = a.size(0), n = a.size(1);
  auto an = node_of(a);
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = an->data[i * n + j];
  }
  return make_op_result({n, m}, std::move(out), {a}, [an, m, n](Node& self) {
    auto& g = an->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
    }
  });
}

Tensor expand_rows(const Tensor& r, std::size_t n) {
  if (r.dim() != 1) {
    throw DimensionError("expand_rows: expected a vector, got " + shape_str(r.shape()));
  }
  const std::size_t d = r.size(0);
  auto rn = node_of(r);
  std::vector<double> out;
  out.reserve(n * d);
  for (std::size_t i = 0; i < n; ++i) out.insert(out.end(), rn->data.begin(), rn->data.end());
  return make_op_result({n, d}, std::move(out), {r}, [rn, n, d](Node& self) {
    auto& g = rn->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[i * d + j];
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_2d(a, "slice_rows");
  const std::size_t rows = a.size(0), cols = a.size(1);
  if (begin > end || end > rows) {
    throw IndexError("slice_rows: [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") out of range for " + shape_str(a.shape()));
  }
  auto an = node_of(a);
  std::vector<double> out(an->data.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                          an->data.begin() + static_cast<std::ptrdiff_t>(end * cols));
  return make_op_result({end - begin, cols}, std::move(out), {a},
                        [an, begin, cols](Node& self) {
    auto& g = an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * cols + i] += self.grad[i];
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_2d(a, "slice_cols");
  const std::size_t rows = a.size(0), cols = a.size(1);
  if (begin > end || end > cols) {
    throw IndexError("slice_cols: [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") out of range for " + shape_str(a.shape()));
  }
  const std::size_t w = end - begin;
  auto an = node_of(a);
  std::vector<double> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(an->data.data() + r * cols + begin, w, out.data() + r * w);
  }
  return make_op_result({rows, w}, std::move(out), {a},
                        [an, rows, cols, begin, w](Node& self) {
    auto& g = an->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < w; ++j) g[r * cols + begin + j] += self.grad[r * w + j];
    }
  });
}

Tensor row(const Tensor& a, std::size_t index) {
  require_2d(a, "row");
  return reshape(slice_rows(a, index, index + 1), {a.size(1)});
}

// ---------------------------------------------------------------------------
// Loss

Tensor bce_loss(const Tensor& predictions, std::span<const double> labels) {
  if (predictions.numel() != labels.size()) {
    throw DimensionError("bce_loss: " + std::to_string(predictions.numel()) +
                         " predictions vs " + std::to_string(labels.size()) +
                         " labels");
  }
  if (labels.empty()) throw DimensionError("bce_loss: empty batch");
  auto pn = node_of(predictions);
  const std::size_t n = labels.size();
  std::vector<double> y(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(pn->data[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total -= y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  return make_op_result({}, {total / static_cast<double>(n)}, {predictions},
                        [pn, y = std::move(y), n](Node& self) {
    auto& g = pn->ensure_grad();
    const double scale_factor = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::clamp(pn->data[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
      g[i] += scale_factor * (-(y[i] / p) + (1.0 - y[i]) / (1.0 - p));
    }
  });
}

}  // namespace suin
