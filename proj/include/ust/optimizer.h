// ust/optimizer.h

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

#ifndef UST_OPTIMIZER_H_
#define UST_OPTIMIZER_H_

#include <string>
#include <unordered_map>
#include <vector>

#include "ust/tensor.h"

namespace ust {

// Parameter roles drive the gradient-centralization scope: GC touches
// convolution weights only.
enum class ParamRole { kConvWeight, kOther };

struct NamedParam {
  std::string name;
  Tensor tensor;
  ParamRole role = ParamRole::kOther;
};

struct OptimizerConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
  bool gc_enabled = true;
  double grad_clip = 0.0;  // global max norm; 0 disables

  void validate() const;
};

// Subtracts each output-channel slice's mean from the gradient. Tensors with
// fewer than 2 dimensions are returned unchanged. Idempotent and linear.
std::vector<double> centralize_gradient(const std::vector<double>& grad,
                                        const Shape& shape);

// Decoupled-weight-decay adaptive-moment update with the GC hook applied to
// in-scope gradients before the moment update.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg);

  // Reads each parameter's accumulated gradient, updates values in place,
  // and advances the moment state. Throws NumericError naming the parameter
  // if its gradient is not finite.
  void step(std::vector<NamedParam>* params);

  std::size_t step_count() const { return step_count_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  OptimizerConfig cfg_;
  std::size_t step_count_ = 0;
  std::unordered_map<std::string, Moments> state_;
};

}  // namespace ust

#endif  // UST_OPTIMIZER_H_
