// ust/optimizer.cc

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

#include "ust/optimizer.h"

#include <cmath>

namespace ust {

void OptimizerConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("OptimizerConfig: lr must be > 0");
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
    throw ConfigError("OptimizerConfig: betas must lie in (0,1)");
  if (eps <= 0.0) throw ConfigError("OptimizerConfig: eps must be > 0");
  if (weight_decay < 0.0 || grad_clip < 0.0)
    throw ConfigError("OptimizerConfig: negative decay or clip");
}

std::vector<double> centralize_gradient(const std::vector<double>& grad,
                                        const Shape& shape) {
  if (shape.size() < 2) return grad;  // scalars and vectors pass through
  const std::size_t out_ch = shape[0];
  const std::size_t slice = grad.size() / out_ch;
  std::vector<double> g = grad;
  for (std::size_t o = 0; o < out_ch; ++o) {
    double* p = g.data() + o * slice;
    double mean = 0.0, max_abs = 0.0;
    for (std::size_t i = 0; i < slice; ++i) {
      mean += p[i];
      max_abs = std::max(max_abs, std::fabs(p[i]));
    }
    mean /= static_cast<double>(slice);
    // a mean at rounding level means the slice is already centered; skipping
    // the subtraction keeps the projection exactly idempotent
    if (std::fabs(mean) <= 1e-12 * max_abs) continue;
    for (std::size_t i = 0; i < slice; ++i) p[i] -= mean;
  }
  return g;
}

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Optimizer::step(std::vector<NamedParam>* params) {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));

  // gather the effective gradients first so clipping sees the whole model
  std::vector<std::vector<double>> grads(params->size());
  for (std::size_t pi = 0; pi < params->size(); ++pi) {
    NamedParam& p = (*params)[pi];
    if (!p.tensor.requires_grad()) continue;
    const auto& g = p.tensor.grad();
    for (double v : g)
      if (!std::isfinite(v))
        throw NumericError("optimizer: non-finite gradient in " + p.name);
    if (cfg_.gc_enabled && p.role == ParamRole::kConvWeight)
      grads[pi] = centralize_gradient(g, p.tensor.shape());
    else
      grads[pi] = g;
  }

  if (cfg_.grad_clip > 0.0) {
    double sq = 0.0;
    for (const auto& g : grads)
      for (double v : g) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > cfg_.grad_clip) {
      const double scale = cfg_.grad_clip / norm;
      for (auto& g : grads)
        for (double& v : g) v *= scale;
    }
  }

  for (std::size_t pi = 0; pi < params->size(); ++pi) {
    NamedParam& p = (*params)[pi];
    if (!p.tensor.requires_grad()) continue;
    auto& values = p.tensor.leaf_values();
    auto& st = state_[p.name];
    if (st.m.size() != values.size()) {
      st.m.assign(values.size(), 0.0);
      st.v.assign(values.size(), 0.0);
    }
    const auto& g = grads[pi];
    for (std::size_t i = 0; i < values.size(); ++i) {
      st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g[i];
      st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = st.m[i] / bc1;
      const double v_hat = st.v[i] / bc2;
      values[i] -= cfg_.lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps) +
                              cfg_.weight_decay * values[i]);
    }
  }
}

}  // namespace ust
