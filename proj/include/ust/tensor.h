// ust/tensor.h

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

#ifndef UST_TENSOR_H_
#define UST_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ust/common.h"

namespace ust {

// Dense float64 n-d array with reverse-mode autodiff. Graphs are taped per
// forward pass and discarded after backward(). Values are validated finite at
// every op boundary; a NaN/Inf raises NumericError instead of propagating.

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorNode;
}

class Tensor {
 public:
  Tensor() = default;  // undefined handle

  static Tensor from(std::vector<double> values, Shape shape,
                     bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t dim(std::size_t i) const { return shape().at(i); }
  std::size_t numel() const;

  const std::vector<double>& values() const;
  // Leaf-only in-place access (optimizer updates, parameter init). Throws if
  // this tensor is an op output.
  std::vector<double>& leaf_values();

  bool requires_grad() const;
  void set_requires_grad(bool v);
  const std::vector<double>& grad() const;  // empty when absent
  void zero_grad();
  void add_to_grad(std::size_t i, double v) const;

  std::uint64_t node_id() const;
  const char* op_name() const;
  bool is_leaf() const;

  double item() const;  // scalar only
  double at(const std::vector<std::size_t>& index) const;

  // Reverse-mode pass from a scalar loss. Every reachable leaf with
  // requires_grad accumulates dLoss/dLeaf; the traversed graph is marked
  // consumed and cannot be traversed again.
  void backward() const;

  detail::TensorNode* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend Tensor make_op(
      const char* name, std::vector<Tensor> inputs,
      std::vector<double> out_values, Shape out_shape,
      std::function<void(const std::vector<double>& out_grad)> backward);
};

namespace detail {
struct TensorNode {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // sized like values when requires_grad
  bool requires_grad = false;
  bool consumed = false;
  std::uint64_t id = 0;
  const char* name = "leaf";
  std::vector<Tensor> parents;
  std::function<void(const std::vector<double>& out_grad)> backward_fn;
};
}  // namespace detail

// Tape switch: while disabled, make_op records no graph (pure evaluation).
class GradMode {
 public:
  static bool enabled();
  explicit GradMode(bool enable);
  ~GradMode();

 private:
  bool prev_;
};

// Records one operation on the tape. `backward` receives dLoss/dOutput and
// must accumulate into the inputs' grads (via Tensor::add_to_grad or bulk
// accumulate_grad). Output values are checked finite.
Tensor make_op(
    const char* name, std::vector<Tensor> inputs, std::vector<double> out_values,
    Shape out_shape,
    std::function<void(const std::vector<double>& out_grad)> backward);

void accumulate_grad(const Tensor& t, const std::vector<double>& g);

// ---- elementwise / reduction / linear-algebra primitives -------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor relu(const Tensor& a);

// y = a . b, optionally with b transposed. `a` is [batch..., m, k]; `b` is
// either [k, n] (broadcast over the batch) or [batch..., k, n]; with
// transpose_b the trailing two extents of b are swapped.
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b = false);

// Adds a length-c row vector to every row of [..., c].
Tensor add_rowvec(const Tensor& x, const Tensor& bias);

Tensor reshape(const Tensor& x, Shape new_shape);
Tensor concat_lastdim(const Tensor& a, const Tensor& b);
Tensor slice_lastdim(const Tensor& x, std::size_t start, std::size_t len);
// [b, t, f] -> [b, f] at frame t.
Tensor slice_time(const Tensor& x, std::size_t t);
// stack of [b, f] frames -> [b, T, f].
Tensor stack_time(const std::vector<Tensor>& frames);
Tensor softmax_axis(const Tensor& x, std::size_t axis);
Tensor sum_axis(const Tensor& x, std::size_t axis);

// ---- gradient checking ------------------------------------------------------

struct GradCheckResult {
  bool pass = false;
  double max_rel_error = 0.0;
};

// Compares reverse-mode d f(x)/dx against central finite differences.
// Relative error uses max(1, |analytic|, |numeric|) in the denominator.
// When max_coords > 0, only that many randomly chosen coordinates are probed
// (rng required); otherwise every coordinate is.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f,
                           const Tensor& x, double step = 1e-5,
                           double tol = 1e-4, std::size_t max_coords = 0,
                           Rng* rng = nullptr);

}  // namespace ust

#endif  // UST_TENSOR_H_
