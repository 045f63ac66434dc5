// ust/tensor.cc

// Copyright 2026  The ust Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "ust/tensor.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace ust {

namespace {

std::atomic<std::uint64_t> g_next_node_id{1};
thread_local bool g_grad_enabled = true;

void check_finite_or_throw(const std::vector<double>& v, const char* where) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << where << ": non-finite value at flat index " << i;
      throw NumericError(os.str());
    }
  }
}

std::shared_ptr<detail::TensorNode> new_node(std::vector<double> values,
                                             Shape shape, bool requires_grad,
                                             const char* name) {
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  node->id = g_next_node_id.fetch_add(1);
  node->name = name;
  if (requires_grad) node->grad.assign(node->values.size(), 0.0);
  return node;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

bool GradMode::enabled() { return g_grad_enabled; }
GradMode::GradMode(bool enable) : prev_(g_grad_enabled) {
  g_grad_enabled = enable;
}
GradMode::~GradMode() { g_grad_enabled = prev_; }

Tensor Tensor::from(std::vector<double> values, Shape shape,
                    bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    std::ostringstream os;
    os << "tensor_from: shape " << shape_str(shape) << " implies "
       << shape_numel(shape) << " values, got " << values.size();
    throw std::invalid_argument(os.str());
  }
  check_finite_or_throw(values, "tensor_from");
  auto node = new_node(std::move(values), std::move(shape), requires_grad, "leaf");
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> v(shape_numel(shape), value);
  return from(std::move(v), std::move(shape), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({value}, Shape{1}, requires_grad);
}

const Shape& Tensor::shape() const {
  check(defined(), "Tensor: undefined handle");
  return node_->shape;
}

std::size_t Tensor::numel() const { return values().size(); }

const std::vector<double>& Tensor::values() const {
  check(defined(), "Tensor: undefined handle");
  return node_->values;
}

std::vector<double>& Tensor::leaf_values() {
  check(defined(), "Tensor: undefined handle");
  if (!is_leaf())
    throw std::logic_error("leaf_values: tensor is an op output, not a leaf");
  return node_->values;
}

bool Tensor::requires_grad() const {
  check(defined(), "Tensor: undefined handle");
  return node_->requires_grad;
}

void Tensor::set_requires_grad(bool v) {
  check(defined(), "Tensor: undefined handle");
  if (!is_leaf())
    throw std::logic_error("set_requires_grad: only valid on leaves");
  node_->requires_grad = v;
  if (v)
    node_->grad.assign(node_->values.size(), 0.0);
  else
    node_->grad.clear();
}

const std::vector<double>& Tensor::grad() const {
  check(defined(), "Tensor: undefined handle");
  return node_->grad;
}

void Tensor::zero_grad() {
  check(defined(), "Tensor: undefined handle");
  if (node_->requires_grad)
    node_->grad.assign(node_->values.size(), 0.0);
}

void Tensor::add_to_grad(std::size_t i, double v) const {
  if (node_->requires_grad) node_->grad[i] += v;
}

std::uint64_t Tensor::node_id() const {
  check(defined(), "Tensor: undefined handle");
  return node_->id;
}

const char* Tensor::op_name() const {
  check(defined(), "Tensor: undefined handle");
  return node_->name;
}

bool Tensor::is_leaf() const {
  check(defined(), "Tensor: undefined handle");
  return node_->parents.empty() && !node_->backward_fn;
}

double Tensor::item() const {
  if (numel() != 1)
    throw std::invalid_argument("item: tensor has " +
                                std::to_string(numel()) + " elements");
  return values()[0];
}

double Tensor::at(const std::vector<std::size_t>& index) const {
  const Shape& s = shape();
  if (index.size() != s.size())
    throw std::invalid_argument("at: rank mismatch");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= s[k]) throw std::out_of_range("at: index out of range");
    flat = flat * s[k] + index[k];
  }
  return values()[flat];
}

void accumulate_grad(const Tensor& t, const std::vector<double>& g) {
  if (!t.requires_grad()) return;
  check(g.size() == t.numel(), "accumulate_grad: size mismatch");
  auto* node = t.node();
  for (std::size_t i = 0; i < g.size(); ++i) node->grad[i] += g[i];
}

Tensor make_op(
    const char* name, std::vector<Tensor> inputs, std::vector<double> out_values,
    Shape out_shape,
    std::function<void(const std::vector<double>& out_grad)> backward) {
  if (shape_numel(out_shape) != out_values.size())
    throw std::logic_error(std::string("make_op(") + name +
                           "): output shape/value mismatch");
  check_finite_or_throw(out_values, name);

  bool track = GradMode::enabled();
  bool any_grad = false;
  if (track) {
    for (const Tensor& t : inputs) any_grad = any_grad || t.requires_grad();
  }
  auto node = new_node(std::move(out_values), std::move(out_shape),
                       track && any_grad, name);
  if (track && any_grad) {
    node->parents = std::move(inputs);
    node->backward_fn = std::move(backward);
  }
  return Tensor(std::move(node));
}

void Tensor::backward() const {
  check(defined(), "backward: undefined handle");
  if (numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                shape_str(shape()));
  if (!node_->requires_grad)
    throw std::invalid_argument("backward: loss does not require grad");

  // Iterative post-order topological sort; child-before-parent order is fixed
  // by the recorded parent lists, so traversal is deterministic.
  std::vector<detail::TensorNode*> topo;
  std::unordered_set<detail::TensorNode*> seen;
  struct Frame {
    detail::TensorNode* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({node_.get(), 0});
  seen.insert(node_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      detail::TensorNode* p = f.node->parents[f.next_parent++].node();
      if (!seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }

  for (detail::TensorNode* n : topo) {
    if (n->consumed)
      throw std::logic_error(
          "backward: graph already consumed by a previous backward pass");
  }

  node_->grad.assign(1, 1.0);
  // topo is post-order: parents first, this node last. Walk in reverse.
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    detail::TensorNode* n = *it;
    if (n->backward_fn && n->requires_grad) n->backward_fn(n->grad);
    if (!n->parents.empty()) n->consumed = true;
  }
}

// ---- primitives -------------------------------------------------------------

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] + b.values()[i];
  return make_op("add", {a, b}, std::move(out), a.shape(),
                 [a, b](const std::vector<double>& g) {
                   if (a.requires_grad())
                     for (std::size_t i = 0; i < g.size(); ++i)
                       a.add_to_grad(i, g[i]);
                   if (b.requires_grad())
                     for (std::size_t i = 0; i < g.size(); ++i)
                       b.add_to_grad(i, g[i]);
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] - b.values()[i];
  return make_op("sub", {a, b}, std::move(out), a.shape(),
                 [a, b](const std::vector<double>& g) {
                   if (a.requires_grad())
                     for (std::size_t i = 0; i < g.size(); ++i)
                       a.add_to_grad(i, g[i]);
                   if (b.requires_grad())
                     for (std::size_t i = 0; i < g.size(); ++i)
                       b.add_to_grad(i, -g[i]);
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] * b.values()[i];
  return make_op("mul", {a, b}, std::move(out), a.shape(),
                 [a, b](const std::vector<double>& g) {
                   if (a.requires_grad())
                     for (std::size_t i = 0; i < g.size(); ++i)
                       a.add_to_grad(i, g[i] * b.values()[i]);
                   if (b.requires_grad())
                     for (std::size_t i = 0; i < g.size(); ++i)
                       b.add_to_grad(i, g[i] * a.values()[i]);
                 });
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + c;
  return make_op("add_scalar", {a}, std::move(out), a.shape(),
                 [a](const std::vector<double>& g) {
                   for (std::size_t i = 0; i < g.size(); ++i)
                     a.add_to_grad(i, g[i]);
                 });
}

Tensor mul_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * c;
  return make_op("mul_scalar", {a}, std::move(out), a.shape(),
                 [a, c](const std::vector<double>& g) {
                   for (std::size_t i = 0; i < g.size(); ++i)
                     a.add_to_grad(i, g[i] * c);
                 });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_op("sum", {a}, {s}, Shape{1},
                 [a](const std::vector<double>& g) {
                   for (std::size_t i = 0; i < a.numel(); ++i)
                     a.add_to_grad(i, g[0]);
                 });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  double s = 0.0;
  for (double v : a.values()) s += v;
  const double inv = 1.0 / static_cast<double>(a.numel());
  return make_op("mean", {a}, {s * inv}, Shape{1},
                 [a, inv](const std::vector<double>& g) {
                   for (std::size_t i = 0; i < a.numel(); ++i)
                     a.add_to_grad(i, g[0] * inv);
                 });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a.values()[i];
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
  }
  std::function<void(const std::vector<double>&)> bw;
  if (GradMode::enabled() && a.requires_grad()) {
    // Capture a copy of the outputs; capturing the output tensor itself would
    // make the node own a handle to itself.
    bw = [a, s = out](const std::vector<double>& g) {
      for (std::size_t i = 0; i < g.size(); ++i)
        a.add_to_grad(i, g[i] * s[i] * (1.0 - s[i]));
    };
  }
  return make_op("sigmoid", {a}, std::move(out), a.shape(), std::move(bw));
}

Tensor tanh_op(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.values()[i]);
  std::function<void(const std::vector<double>&)> bw;
  if (GradMode::enabled() && a.requires_grad()) {
    bw = [a, t = out](const std::vector<double>& g) {
      for (std::size_t i = 0; i < g.size(); ++i)
        a.add_to_grad(i, g[i] * (1.0 - t[i] * t[i]));
    };
  }
  return make_op("tanh", {a}, std::move(out), a.shape(), std::move(bw));
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
  return make_op("relu", {a}, std::move(out), a.shape(),
                 [a](const std::vector<double>& g) {
                   for (std::size_t i = 0; i < g.size(); ++i)
                     if (a.values()[i] > 0.0) a.add_to_grad(i, g[i]);
                 });
}

namespace {

struct MatShape {
  std::size_t batch, m, k;
};

MatShape split_batched(const Shape& s, const char* op) {
  if (s.size() < 2)
    throw std::invalid_argument(std::string(op) + ": need rank >= 2");
  std::size_t batch = 1;
  for (std::size_t i = 0; i + 2 < s.size(); ++i) batch *= s[i];
  return {batch, s[s.size() - 2], s[s.size() - 1]};
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b) {
  MatShape as = split_batched(a.shape(), "matmul");
  MatShape bs = split_batched(b.shape(), "matmul");
  const std::size_t m = as.m, k = as.k;
  const std::size_t bk = transpose_b ? bs.k : bs.m;
  const std::size_t n = transpose_b ? bs.m : bs.k;
  if (bk != k)
    throw std::invalid_argument("matmul: inner extent mismatch " +
                                shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  const bool b_broadcast = (bs.batch == 1 && b.shape().size() == 2);
  if (!b_broadcast && bs.batch != as.batch)
    throw std::invalid_argument("matmul: batch extent mismatch");

  Shape out_shape(a.shape().begin(), a.shape().end() - 2);
  out_shape.push_back(m);
  out_shape.push_back(n);

  std::vector<double> out(as.batch * m * n, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t bi = 0; bi < as.batch; ++bi) {
    const double* A = av.data() + bi * m * k;
    const double* B = bv.data() + (b_broadcast ? 0 : bi * bs.m * bs.k);
    double* Y = out.data() + bi * m * n;
    if (!transpose_b) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aval = A[i * k + p];
          if (aval == 0.0) continue;
          const double* Brow = B + p * n;
          double* Yrow = Y + i * n;
          for (std::size_t j = 0; j < n; ++j) Yrow[j] += aval * Brow[j];
        }
    } else {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double* Arow = A + i * k;
          const double* Brow = B + j * k;
          double acc = 0.0;
          for (std::size_t p = 0; p < k; ++p) acc += Arow[p] * Brow[p];
          Y[i * n + j] = acc;
        }
    }
  }

  const std::size_t batch = as.batch;
  return make_op(
      "matmul", {a, b}, std::move(out), std::move(out_shape),
      [a, b, transpose_b, b_broadcast, batch, m, n, k](
          const std::vector<double>& g) {
        const auto& av = a.values();
        const auto& bv = b.values();
        auto* an = a.node();
        auto* bn = b.node();
        for (std::size_t bi = 0; bi < batch; ++bi) {
          const double* A = av.data() + bi * m * k;
          const double* B = bv.data() + (b_broadcast ? 0 : bi * (transpose_b ? n * k : k * n));
          const double* G = g.data() + bi * m * n;
          if (a.requires_grad()) {
            double* dA = an->grad.data() + bi * m * k;
            if (!transpose_b) {
              // dA = G . B^T
              for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                  const double* Grow = G + i * n;
                  const double* Brow = B + p * n;
                  double acc = 0.0;
                  for (std::size_t j = 0; j < n; ++j) acc += Grow[j] * Brow[j];
                  dA[i * k + p] += acc;
                }
            } else {
              // y = A . B^T with B [n,k]: dA = G . B
              for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                  const double gval = G[i * n + j];
                  if (gval == 0.0) continue;
                  const double* Brow = B + j * k;
                  double* dArow = dA + i * k;
                  for (std::size_t p = 0; p < k; ++p) dArow[p] += gval * Brow[p];
                }
            }
          }
          if (b.requires_grad()) {
            double* dB = bn->grad.data() +
                         (b_broadcast ? 0 : bi * (transpose_b ? n * k : k * n));
            if (!transpose_b) {
              // dB = A^T . G
              for (std::size_t p = 0; p < k; ++p)
                for (std::size_t i = 0; i < m; ++i) {
                  const double aval = A[i * k + p];
                  if (aval == 0.0) continue;
                  const double* Grow = G + i * n;
                  double* dBrow = dB + p * n;
                  for (std::size_t j = 0; j < n; ++j) dBrow[j] += aval * Grow[j];
                }
            } else {
              // dB[j,p] = sum_i G[i,j] A[i,p]
              for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i < m; ++i) {
                  const double gval = G[i * n + j];
                  if (gval == 0.0) continue;
                  const double* Arow = A + i * k;
                  double* dBrow = dB + j * k;
                  for (std::size_t p = 0; p < k; ++p) dBrow[p] += gval * Arow[p];
                }
            }
          }
        }
      });
}

Tensor add_rowvec(const Tensor& x, const Tensor& bias) {
  if (bias.ndim() != 1 || x.ndim() < 1 ||
      x.shape().back() != bias.dim(0))
    throw std::invalid_argument("add_rowvec: trailing extent mismatch");
  const std::size_t c = bias.dim(0);
  const std::size_t rows = x.numel() / c;
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < c; ++j)
      out[r * c + j] = x.values()[r * c + j] + bias.values()[j];
  return make_op("add_rowvec", {x, bias}, std::move(out), x.shape(),
                 [x, bias, rows, c](const std::vector<double>& g) {
                   if (x.requires_grad())
                     for (std::size_t i = 0; i < g.size(); ++i)
                       x.add_to_grad(i, g[i]);
                   if (bias.requires_grad())
                     for (std::size_t r = 0; r < rows; ++r)
                       for (std::size_t j = 0; j < c; ++j)
                         bias.add_to_grad(j, g[r * c + j]);
                 });
}

Tensor reshape(const Tensor& x, Shape new_shape) {
  if (shape_numel(new_shape) != x.numel())
    throw std::invalid_argument("reshape: element count mismatch");
  return make_op("reshape", {x}, x.values(), std::move(new_shape),
                 [x](const std::vector<double>& g) {
                   for (std::size_t i = 0; i < g.size(); ++i)
                     x.add_to_grad(i, g[i]);
                 });
}

Tensor concat_lastdim(const Tensor& a, const Tensor& b) {
  if (a.ndim() != b.ndim() || a.ndim() < 1)
    throw std::invalid_argument("concat_lastdim: rank mismatch");
  for (std::size_t i = 0; i + 1 < a.ndim(); ++i)
    if (a.dim(i) != b.dim(i))
      throw std::invalid_argument("concat_lastdim: leading extents differ");
  const std::size_t ca = a.shape().back(), cb = b.shape().back();
  const std::size_t rows = a.numel() / ca;
  Shape out_shape = a.shape();
  out_shape.back() = ca + cb;
  std::vector<double> out(rows * (ca + cb));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < ca; ++j)
      out[r * (ca + cb) + j] = a.values()[r * ca + j];
    for (std::size_t j = 0; j < cb; ++j)
      out[r * (ca + cb) + ca + j] = b.values()[r * cb + j];
  }
  return make_op("concat_lastdim", {a, b}, std::move(out), std::move(out_shape),
                 [a, b, rows, ca, cb](const std::vector<double>& g) {
                   for (std::size_t r = 0; r < rows; ++r) {
                     if (a.requires_grad())
                       for (std::size_t j = 0; j < ca; ++j)
                         a.add_to_grad(r * ca + j, g[r * (ca + cb) + j]);
                     if (b.requires_grad())
                       for (std::size_t j = 0; j < cb; ++j)
                         b.add_to_grad(r * cb + j, g[r * (ca + cb) + ca + j]);
                   }
                 });
}

Tensor slice_lastdim(const Tensor& x, std::size_t start, std::size_t len) {
  const std::size_t c = x.shape().back();
  if (start + len > c)
    throw std::invalid_argument("slice_lastdim: range out of bounds");
  const std::size_t rows = x.numel() / c;
  Shape out_shape = x.shape();
  out_shape.back() = len;
  std::vector<double> out(rows * len);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < len; ++j)
      out[r * len + j] = x.values()[r * c + start + j];
  return make_op("slice_lastdim", {x}, std::move(out), std::move(out_shape),
                 [x, rows, c, start, len](const std::vector<double>& g) {
                   for (std::size_t r = 0; r < rows; ++r)
                     for (std::size_t j = 0; j < len; ++j)
                       x.add_to_grad(r * c + start + j, g[r * len + j]);
                 });
}

Tensor slice_time(const Tensor& x, std::size_t t) {
  if (x.ndim() != 3) throw std::invalid_argument("slice_time: need [b,T,f]");
  const std::size_t b = x.dim(0), T = x.dim(1), f = x.dim(2);
  if (t >= T) throw std::invalid_argument("slice_time: frame out of range");
  std::vector<double> out(b * f);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < f; ++j)
      out[i * f + j] = x.values()[(i * T + t) * f + j];
  return make_op("slice_time", {x}, std::move(out), Shape{b, f},
                 [x, b, T, f, t](const std::vector<double>& g) {
                   for (std::size_t i = 0; i < b; ++i)
                     for (std::size_t j = 0; j < f; ++j)
                       x.add_to_grad((i * T + t) * f + j, g[i * f + j]);
                 });
}

Tensor stack_time(const std::vector<Tensor>& frames) {
  if (frames.empty()) throw std::invalid_argument("stack_time: empty");
  const std::size_t b = frames[0].dim(0), f = frames[0].dim(1);
  const std::size_t T = frames.size();
  std::vector<double> out(b * T * f);
  for (std::size_t t = 0; t < T; ++t) {
    if (frames[t].ndim() != 2 || frames[t].dim(0) != b || frames[t].dim(1) != f)
      throw std::invalid_argument("stack_time: frame shape mismatch");
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < f; ++j)
        out[(i * T + t) * f + j] = frames[t].values()[i * f + j];
  }
  std::vector<Tensor> inputs = frames;
  return make_op("stack_time", std::move(inputs), std::move(out), Shape{b, T, f},
                 [frames, b, T, f](const std::vector<double>& g) {
                   for (std::size_t t = 0; t < T; ++t) {
                     if (!frames[t].requires_grad()) continue;
                     for (std::size_t i = 0; i < b; ++i)
                       for (std::size_t j = 0; j < f; ++j)
                         frames[t].add_to_grad(i * f + j,
                                               g[(i * T + t) * f + j]);
                   }
                 });
}

namespace {

// Decomposes a shape around `axis` into outer x axis x inner strides.
struct AxisView {
  std::size_t outer, extent, inner;
};

AxisView axis_view(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size())
    throw std::invalid_argument(std::string(op) + ": axis out of range");
  AxisView v{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

}  // namespace

Tensor softmax_axis(const Tensor& x, std::size_t axis) {
  AxisView v = axis_view(x.shape(), axis, "softmax_axis");
  if (v.extent == 0) throw std::invalid_argument("softmax_axis: empty axis");
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.extent * v.inner + in;
      double mx = -1e300;
      for (std::size_t a = 0; a < v.extent; ++a)
        mx = std::max(mx, xv[base + a * v.inner]);
      double denom = 0.0;
      for (std::size_t a = 0; a < v.extent; ++a)
        denom += std::exp(xv[base + a * v.inner] - mx);
      for (std::size_t a = 0; a < v.extent; ++a)
        out[base + a * v.inner] = std::exp(xv[base + a * v.inner] - mx) / denom;
    }
  std::function<void(const std::vector<double>&)> bw;
  if (GradMode::enabled() && x.requires_grad()) {
    bw = [x, yv = out, v](const std::vector<double>& g) {
      for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t in = 0; in < v.inner; ++in) {
          const std::size_t base = o * v.extent * v.inner + in;
          double dot = 0.0;
          for (std::size_t a = 0; a < v.extent; ++a) {
            const std::size_t i = base + a * v.inner;
            dot += g[i] * yv[i];
          }
          for (std::size_t a = 0; a < v.extent; ++a) {
            const std::size_t i = base + a * v.inner;
            x.add_to_grad(i, yv[i] * (g[i] - dot));
          }
        }
    };
  }
  return make_op("softmax_axis", {x}, std::move(out), x.shape(), std::move(bw));
}

Tensor sum_axis(const Tensor& x, std::size_t axis) {
  AxisView v = axis_view(x.shape(), axis, "sum_axis");
  Shape out_shape;
  for (std::size_t i = 0; i < x.ndim(); ++i)
    if (i != axis) out_shape.push_back(x.dim(i));
  if (out_shape.empty()) out_shape.push_back(1);
  std::vector<double> out(v.outer * v.inner, 0.0);
  const auto& xv = x.values();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t a = 0; a < v.extent; ++a)
      for (std::size_t in = 0; in < v.inner; ++in)
        out[o * v.inner + in] += xv[(o * v.extent + a) * v.inner + in];
  return make_op("sum_axis", {x}, std::move(out), std::move(out_shape),
                 [x, v](const std::vector<double>& g) {
                   for (std::size_t o = 0; o < v.outer; ++o)
                     for (std::size_t a = 0; a < v.extent; ++a)
                       for (std::size_t in = 0; in < v.inner; ++in)
                         x.add_to_grad((o * v.extent + a) * v.inner + in,
                                       g[o * v.inner + in]);
                 });
}

// ---- gradient checking ------------------------------------------------------

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f,
                           const Tensor& x, double step, double tol,
                           std::size_t max_coords, Rng* rng) {
  Tensor probe = Tensor::from(x.values(), x.shape(), true);
  Tensor y = f(probe);
  if (y.numel() != 1)
    throw std::invalid_argument("grad_check: f must be scalar-valued");
  y.backward();
  std::vector<double> analytic = probe.grad();

  std::vector<std::size_t> coords;
  if (max_coords == 0 || max_coords >= probe.numel()) {
    coords.resize(probe.numel());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  } else {
    check(rng != nullptr, "grad_check: rng required for sampled coordinates");
    for (std::size_t i = 0; i < max_coords; ++i)
      coords.push_back(rng->uniform_index(probe.numel()));
  }

  GradCheckResult result;
  result.pass = true;
  GradMode eval_only(false);
  std::vector<double> base = probe.leaf_values();
  for (std::size_t i : coords) {
    std::vector<double> vp = base, vm = base;
    vp[i] += step;
    vm[i] -= step;
    Tensor xp = Tensor::from(vp, x.shape(), false);
    Tensor xm = Tensor::from(vm, x.shape(), false);
    double numeric = (f(xp).item() - f(xm).item()) / (2.0 * step);
    double denom = std::max({1.0, std::fabs(analytic[i]), std::fabs(numeric)});
    double rel = std::fabs(analytic[i] - numeric) / denom;
    result.max_rel_error = std::max(result.max_rel_error, rel);
  }
  result.pass = result.max_rel_error < tol;
  return result;
}

}  // namespace ust
