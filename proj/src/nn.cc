// ust/nn.cc

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

#include "ust/nn.h"

#include <algorithm>
#include <cmath>

namespace ust {
namespace nn {

namespace {

Tensor uniform_init(Shape shape, double bound, Rng* rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng->uniform(-bound, bound);
  return Tensor::from(std::move(v), std::move(shape), true);
}

double softplus_stable(double x) {
  if (x > 20.0) return x + std::exp(-x);
  if (x < -20.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

ConvSpec ConvSpec::init(std::size_t in_ch, std::size_t out_ch, Rng* rng) {
  ConvSpec s;
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  const double bound = std::sqrt(1.0 / (static_cast<double>(in_ch) * 9.0));
  s.weight = uniform_init({out_ch, in_ch, 3, 3}, bound, rng);
  s.bias = uniform_init({out_ch}, bound, rng);
  return s;
}

BatchNormSpec BatchNormSpec::init(std::size_t channels) {
  BatchNormSpec s;
  s.n_channels = channels;
  s.gamma = Tensor::full({channels}, 1.0, true);
  s.beta = Tensor::zeros({channels}, true);
  s.running_mean.assign(channels, 0.0);
  s.running_var.assign(channels, 1.0);
  return s;
}

GroupNormSpec GroupNormSpec::init(std::size_t groups, std::size_t channels) {
  if (groups == 0 || channels % groups != 0)
    throw ConfigError("GroupNormSpec: channels not divisible by groups");
  GroupNormSpec s;
  s.n_groups = groups;
  s.n_channels = channels;
  s.gamma = Tensor::full({channels}, 1.0, true);
  s.beta = Tensor::zeros({channels}, true);
  return s;
}

GruSpec GruSpec::init(std::size_t input_dim, std::size_t hidden_dim, Rng* rng) {
  GruSpec s;
  s.input_dim = input_dim;
  s.hidden_dim = hidden_dim;
  const double bound = std::sqrt(1.0 / static_cast<double>(hidden_dim));
  auto make_dir = [&](GruSpec::Direction* d) {
    d->w_reset = uniform_init({input_dim, hidden_dim}, bound, rng);
    d->w_update = uniform_init({input_dim, hidden_dim}, bound, rng);
    d->w_cand = uniform_init({input_dim, hidden_dim}, bound, rng);
    d->u_reset = uniform_init({hidden_dim, hidden_dim}, bound, rng);
    d->u_update = uniform_init({hidden_dim, hidden_dim}, bound, rng);
    d->u_cand = uniform_init({hidden_dim, hidden_dim}, bound, rng);
    d->b_reset = Tensor::zeros({hidden_dim}, true);
    d->b_update = Tensor::zeros({hidden_dim}, true);
    d->b_cand = Tensor::zeros({hidden_dim}, true);
  };
  make_dir(&s.fwd);
  make_dir(&s.bwd);
  return s;
}

AttentionSpec AttentionSpec::init(std::size_t d_model, std::size_t n_heads,
                                  Rng* rng) {
  if (n_heads == 0 || d_model % n_heads != 0)
    throw ConfigError("AttentionSpec: d_model not divisible by n_heads");
  AttentionSpec s;
  s.d_model = d_model;
  s.n_heads = n_heads;
  const double bound = std::sqrt(1.0 / static_cast<double>(d_model));
  s.w_query = uniform_init({d_model, d_model}, bound, rng);
  s.w_key = uniform_init({d_model, d_model}, bound, rng);
  s.w_value = uniform_init({d_model, d_model}, bound, rng);
  s.w_out = uniform_init({d_model, d_model}, bound, rng);
  s.b_query = Tensor::zeros({d_model}, true);
  s.b_key = Tensor::zeros({d_model}, true);
  s.b_value = Tensor::zeros({d_model}, true);
  s.b_out = Tensor::zeros({d_model}, true);
  return s;
}

LinearSpec LinearSpec::init(std::size_t in_dim, std::size_t out_dim, Rng* rng) {
  LinearSpec s;
  s.in_dim = in_dim;
  s.out_dim = out_dim;
  const double bound = std::sqrt(1.0 / static_cast<double>(in_dim));
  s.weight = uniform_init({in_dim, out_dim}, bound, rng);
  s.bias = uniform_init({out_dim}, bound, rng);
  return s;
}

Tensor conv2d(const Tensor& x, const ConvSpec& spec) {
  if (x.ndim() != 4) throw std::invalid_argument("conv2d: need [b,c,t,f]");
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), F = x.dim(3);
  if (C != spec.in_channels)
    throw std::invalid_argument("conv2d: input has " + std::to_string(C) +
                                " channels, spec expects " +
                                std::to_string(spec.in_channels));
  const std::size_t O = spec.out_channels;
  const Tensor w = spec.weight, bias = spec.bias;

  std::vector<double> out(B * O * T * F);
  const auto& xv = x.values();
  const auto& wv = w.values();
  const auto& bv = bias.values();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < O; ++o) {
      double* y = out.data() + (b * O + o) * T * F;
      std::fill(y, y + T * F, bv[o]);
      for (std::size_t c = 0; c < C; ++c) {
        const double* xp = xv.data() + (b * C + c) * T * F;
        const double* wp = wv.data() + (o * C + c) * 9;
        for (int u = 0; u < 3; ++u) {
          const int di = u - 1;
          for (int v = 0; v < 3; ++v) {
            const int dj = v - 1;
            const double k = wp[u * 3 + v];
            if (k == 0.0) continue;
            const std::size_t i_lo = di < 0 ? 1 : 0;
            const std::size_t i_hi = di > 0 ? T - 1 : T;
            const std::size_t j_lo = dj < 0 ? 1 : 0;
            const std::size_t j_hi = dj > 0 ? F - 1 : F;
            for (std::size_t i = i_lo; i < i_hi; ++i) {
              const double* src = xp + (i + di) * F + dj;
              double* dst = y + i * F;
              for (std::size_t j = j_lo; j < j_hi; ++j) dst[j] += k * src[j];
            }
          }
        }
      }
    }
  }

  return make_op(
      "conv2d", {x, w, bias}, std::move(out), {B, O, T, F},
      [x, w, bias, B, C, T, F, O](const std::vector<double>& g) {
        const auto& xv = x.values();
        const auto& wv = w.values();
        auto* xn = x.node();
        auto* wn = w.node();
        auto* bn = bias.node();
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t o = 0; o < O; ++o) {
            const double* gp = g.data() + (b * O + o) * T * F;
            if (bias.requires_grad()) {
              double acc = 0.0;
              for (std::size_t i = 0; i < T * F; ++i) acc += gp[i];
              bn->grad[o] += acc;
            }
            for (std::size_t c = 0; c < C; ++c) {
              const double* xp = xv.data() + (b * C + c) * T * F;
              const double* wp = wv.data() + (o * C + c) * 9;
              double* dxp =
                  x.requires_grad() ? xn->grad.data() + (b * C + c) * T * F : nullptr;
              double* dwp =
                  w.requires_grad() ? wn->grad.data() + (o * C + c) * 9 : nullptr;
              for (int u = 0; u < 3; ++u) {
                const int di = u - 1;
                for (int v = 0; v < 3; ++v) {
                  const int dj = v - 1;
                  const std::size_t i_lo = di < 0 ? 1 : 0;
                  const std::size_t i_hi = di > 0 ? T - 1 : T;
                  const std::size_t j_lo = dj < 0 ? 1 : 0;
                  const std::size_t j_hi = dj > 0 ? F - 1 : F;
                  const double k = wp[u * 3 + v];
                  double wacc = 0.0;
                  for (std::size_t i = i_lo; i < i_hi; ++i) {
                    const double* grow = gp + i * F;
                    const double* xrow = xp + (i + di) * F + dj;
                    double* dxrow = dxp ? dxp + (i + di) * F + dj : nullptr;
                    if (dxp && k != 0.0)
                      for (std::size_t j = j_lo; j < j_hi; ++j)
                        dxrow[j] += k * grow[j];
                    if (dwp)
                      for (std::size_t j = j_lo; j < j_hi; ++j)
                        wacc += grow[j] * xrow[j];
                  }
                  if (dwp) dwp[u * 3 + v] += wacc;
                }
              }
            }
          }
        }
      });
}

Tensor maxpool2d(const Tensor& x, const PoolSpec& spec) {
  if (x.ndim() != 4) throw std::invalid_argument("maxpool2d: need [b,c,t,f]");
  const std::size_t pt = spec.pool_time, pf = spec.pool_freq;
  if ((pt != 1 && pt != 2) || (pf != 1 && pf != 2))
    throw std::invalid_argument("maxpool2d: pool factors must be 1 or 2");
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), F = x.dim(3);
  if (T == 0 || F == 0) throw std::invalid_argument("maxpool2d: zero extent");
  if (T % pt != 0 || F % pf != 0)
    throw std::invalid_argument("maxpool2d: extents must divide pool factors");
  const std::size_t OT = T / pt, OF = F / pf;

  std::vector<double> out(B * C * OT * OF);
  std::vector<std::size_t> argmax(out.size());
  const auto& xv = x.values();
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const double* xp = xv.data() + bc * T * F;
    double* y = out.data() + bc * OT * OF;
    std::size_t* am = argmax.data() + bc * OT * OF;
    for (std::size_t i = 0; i < OT; ++i)
      for (std::size_t j = 0; j < OF; ++j) {
        double best = -1e308;
        std::size_t best_idx = 0;
        for (std::size_t u = 0; u < pt; ++u)
          for (std::size_t v = 0; v < pf; ++v) {
            const std::size_t idx = (i * pt + u) * F + (j * pf + v);
            if (xp[idx] > best) {
              best = xp[idx];
              best_idx = idx;
            }
          }
        y[i * OF + j] = best;
        am[i * OF + j] = bc * T * F + best_idx;
      }
  }

  return make_op("maxpool2d", {x}, std::move(out), {B, C, OT, OF},
                 [x, argmax](const std::vector<double>& g) {
                   for (std::size_t i = 0; i < g.size(); ++i)
                     x.add_to_grad(argmax[i], g[i]);
                 });
}

Tensor batch_norm(const Tensor& x, BatchNormSpec* spec, bool training) {
  if (x.ndim() != 4) throw std::invalid_argument("batch_norm: need [b,c,t,f]");
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), F = x.dim(3);
  if (C != spec->n_channels)
    throw std::invalid_argument("batch_norm: channel mismatch");
  if (training && B < 2)
    throw std::invalid_argument(
        "batch_norm: training mode needs batch size >= 2");
  const std::size_t plane = T * F;
  const double n_stat = static_cast<double>(B * plane);

  const auto& xv = x.values();
  std::vector<double> mean(C, 0.0), var(C, 0.0);
  if (training) {
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) {
        const double* xp = xv.data() + (b * C + c) * plane;
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += xp[i];
        mean[c] += acc;
      }
    for (std::size_t c = 0; c < C; ++c) mean[c] /= n_stat;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) {
        const double* xp = xv.data() + (b * C + c) * plane;
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = xp[i] - mean[c];
          acc += d * d;
        }
        var[c] += acc;
      }
    for (std::size_t c = 0; c < C; ++c) var[c] /= n_stat;
    for (std::size_t c = 0; c < C; ++c) {
      spec->running_mean[c] =
          (1.0 - spec->momentum) * spec->running_mean[c] + spec->momentum * mean[c];
      spec->running_var[c] =
          (1.0 - spec->momentum) * spec->running_var[c] + spec->momentum * var[c];
    }
  } else {
    mean = spec->running_mean;
    var = spec->running_var;
  }

  std::vector<double> inv_std(C);
  for (std::size_t c = 0; c < C; ++c)
    inv_std[c] = 1.0 / std::sqrt(var[c] + spec->eps);

  const Tensor gamma = spec->gamma, beta = spec->beta;
  const auto& gv = gamma.values();
  const auto& bv = beta.values();
  std::vector<double> xhat(xv.size());
  std::vector<double> out(xv.size());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const double* xp = xv.data() + (b * C + c) * plane;
      double* hp = xhat.data() + (b * C + c) * plane;
      double* yp = out.data() + (b * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        hp[i] = (xp[i] - mean[c]) * inv_std[c];
        yp[i] = gv[c] * hp[i] + bv[c];
      }
    }

  return make_op(
      "batch_norm", {x, gamma, beta}, std::move(out), x.shape(),
      [x, gamma, beta, xhat, inv_std, training, B, C, plane,
       n_stat](const std::vector<double>& g) {
        auto* xn = x.node();
        auto* gn = gamma.node();
        auto* bn = beta.node();
        const auto& gv = gamma.values();
        for (std::size_t c = 0; c < C; ++c) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t b = 0; b < B; ++b) {
            const double* gp = g.data() + (b * C + c) * plane;
            const double* hp = xhat.data() + (b * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              sum_g += gp[i];
              sum_gx += gp[i] * hp[i];
            }
          }
          if (gamma.requires_grad()) gn->grad[c] += sum_gx;
          if (beta.requires_grad()) bn->grad[c] += sum_g;
          if (x.requires_grad()) {
            const double scale = gv[c] * inv_std[c];
            for (std::size_t b = 0; b < B; ++b) {
              const double* gp = g.data() + (b * C + c) * plane;
              const double* hp = xhat.data() + (b * C + c) * plane;
              double* dx = xn->grad.data() + (b * C + c) * plane;
              if (training) {
                for (std::size_t i = 0; i < plane; ++i)
                  dx[i] += scale * (gp[i] - sum_g / n_stat -
                                    hp[i] * sum_gx / n_stat);
              } else {
                for (std::size_t i = 0; i < plane; ++i) dx[i] += scale * gp[i];
              }
            }
          }
        }
      });
}

Tensor group_norm(const Tensor& x, const GroupNormSpec& spec) {
  if (x.ndim() != 4) throw std::invalid_argument("group_norm: need [b,c,t,f]");
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), F = x.dim(3);
  if (C != spec.n_channels)
    throw std::invalid_argument("group_norm: channel mismatch");
  if (C % spec.n_groups != 0)
    throw std::invalid_argument("group_norm: channels not divisible by groups");
  const std::size_t G = spec.n_groups;
  const std::size_t cg = C / G;
  const std::size_t plane = T * F;
  const std::size_t group_n = cg * plane;

  const auto& xv = x.values();
  const Tensor gamma = spec.gamma, beta = spec.beta;
  const auto& gv = gamma.values();
  const auto& bv = beta.values();

  std::vector<double> xhat(xv.size());
  std::vector<double> inv_std(B * G);
  std::vector<double> out(xv.size());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t g = 0; g < G; ++g) {
      const double* xp = xv.data() + (b * C + g * cg) * plane;
      double mu = 0.0;
      for (std::size_t i = 0; i < group_n; ++i) mu += xp[i];
      mu /= static_cast<double>(group_n);
      double var = 0.0;
      for (std::size_t i = 0; i < group_n; ++i) {
        const double d = xp[i] - mu;
        var += d * d;
      }
      var /= static_cast<double>(group_n);
      const double istd = 1.0 / std::sqrt(var + spec.eps);
      inv_std[b * G + g] = istd;
      double* hp = xhat.data() + (b * C + g * cg) * plane;
      double* yp = out.data() + (b * C + g * cg) * plane;
      for (std::size_t cc = 0; cc < cg; ++cc) {
        const std::size_t c = g * cg + cc;
        for (std::size_t i = 0; i < plane; ++i) {
          const std::size_t idx = cc * plane + i;
          hp[idx] = (xp[idx] - mu) * istd;
          yp[idx] = gv[c] * hp[idx] + bv[c];
        }
      }
    }

  return make_op(
      "group_norm", {x, gamma, beta}, std::move(out), x.shape(),
      [x, gamma, beta, xhat, inv_std, B, C, G, cg,
       plane](const std::vector<double>& g) {
        auto* xn = x.node();
        auto* gn = gamma.node();
        auto* bn = beta.node();
        const auto& gv = gamma.values();
        const double group_n = static_cast<double>(cg * plane);
        if (gamma.requires_grad() || beta.requires_grad()) {
          for (std::size_t c = 0; c < C; ++c) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
              const double* gp = g.data() + (b * C + c) * plane;
              const double* hp = xhat.data() + (b * C + c) * plane;
              for (std::size_t i = 0; i < plane; ++i) {
                sum_g += gp[i];
                sum_gx += gp[i] * hp[i];
              }
            }
            if (gamma.requires_grad()) gn->grad[c] += sum_gx;
            if (beta.requires_grad()) bn->grad[c] += sum_g;
          }
        }
        if (!x.requires_grad()) return;
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t grp = 0; grp < G; ++grp) {
            // dxhat = g * gamma; reduce within the group
            double sum_d = 0.0, sum_dx = 0.0;
            for (std::size_t cc = 0; cc < cg; ++cc) {
              const std::size_t c = grp * cg + cc;
              const double* gp = g.data() + (b * C + c) * plane;
              const double* hp = xhat.data() + (b * C + c) * plane;
              for (std::size_t i = 0; i < plane; ++i) {
                const double d = gp[i] * gv[c];
                sum_d += d;
                sum_dx += d * hp[i];
              }
            }
            const double istd = inv_std[b * G + grp];
            for (std::size_t cc = 0; cc < cg; ++cc) {
              const std::size_t c = grp * cg + cc;
              const double* gp = g.data() + (b * C + c) * plane;
              const double* hp = xhat.data() + (b * C + c) * plane;
              double* dx = xn->grad.data() + (b * C + c) * plane;
              for (std::size_t i = 0; i < plane; ++i) {
                const double d = gp[i] * gv[c];
                dx[i] += istd * (d - sum_d / group_n - hp[i] * sum_dx / group_n);
              }
            }
          }
      });
}

Tensor mish(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = xv[i] * std::tanh(softplus_stable(xv[i]));
  std::function<void(const std::vector<double>&)> bw;
  if (GradMode::enabled() && x.requires_grad()) {
    bw = [x](const std::vector<double>& g) {
      const auto& xv = x.values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = std::tanh(softplus_stable(xv[i]));
        const double deriv = t + xv[i] * (1.0 - t * t) * logistic(xv[i]);
        x.add_to_grad(i, g[i] * deriv);
      }
    };
  }
  return make_op("mish", {x}, std::move(out), x.shape(), std::move(bw));
}

Tensor bigru(const Tensor& x, const GruSpec& spec) {
  if (x.ndim() != 3) throw std::invalid_argument("bigru: need [b,t,feat]");
  const std::size_t B = x.dim(0), T = x.dim(1), feat = x.dim(2);
  if (feat != spec.input_dim)
    throw std::invalid_argument("bigru: feature dim mismatch");
  if (T == 0) throw std::invalid_argument("bigru: empty time axis");
  const std::size_t H = spec.hidden_dim;

  auto run_direction = [&](const GruSpec::Direction& d, bool reverse) {
    std::vector<Tensor> outputs(T);
    Tensor h = Tensor::zeros({B, H});
    for (std::size_t step = 0; step < T; ++step) {
      const std::size_t t = reverse ? T - 1 - step : step;
      Tensor xt = slice_time(x, t);  // [B, feat]
      Tensor r = sigmoid(add_rowvec(
          add(matmul(xt, d.w_reset), matmul(h, d.u_reset)), d.b_reset));
      Tensor z = sigmoid(add_rowvec(
          add(matmul(xt, d.w_update), matmul(h, d.u_update)), d.b_update));
      Tensor n = tanh_op(add_rowvec(
          add(matmul(xt, d.w_cand), matmul(mul(r, h), d.u_cand)), d.b_cand));
      // h' = (1-z) (.) n + z (.) h
      Tensor one_minus_z = add_scalar(mul_scalar(z, -1.0), 1.0);
      h = add(mul(one_minus_z, n), mul(z, h));
      outputs[t] = h;
    }
    return stack_time(outputs);  // [B, T, H]
  };

  Tensor fwd = run_direction(spec.fwd, false);
  Tensor bwd = run_direction(spec.bwd, true);
  return concat_lastdim(fwd, bwd);
}

Tensor multi_head_self_attention(const Tensor& x, const AttentionSpec& spec) {
  if (x.ndim() != 3) throw std::invalid_argument("mhsa: need [b,t,d_model]");
  const std::size_t D = x.dim(2);
  if (D != spec.d_model)
    throw std::invalid_argument("mhsa: d_model mismatch");
  if (spec.d_model % spec.n_heads != 0)
    throw std::invalid_argument("mhsa: d_model not divisible by n_heads");
  const std::size_t dh = spec.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor q = add_rowvec(matmul(x, spec.w_query), spec.b_query);
  Tensor k = add_rowvec(matmul(x, spec.w_key), spec.b_key);
  Tensor v = add_rowvec(matmul(x, spec.w_value), spec.b_value);

  Tensor heads;  // concatenated context
  for (std::size_t h = 0; h < spec.n_heads; ++h) {
    Tensor qh = slice_lastdim(q, h * dh, dh);  // [b,t,dh]
    Tensor kh = slice_lastdim(k, h * dh, dh);
    Tensor vh = slice_lastdim(v, h * dh, dh);
    Tensor scores = mul_scalar(matmul(qh, kh, /*transpose_b=*/true), scale);
    Tensor attn = softmax_axis(scores, scores.ndim() - 1);  // rows sum to 1
    Tensor ctx = matmul(attn, vh);  // [b,t,dh]
    heads = h == 0 ? ctx : concat_lastdim(heads, ctx);
  }
  return add_rowvec(matmul(heads, spec.w_out), spec.b_out);
}

Tensor frame_classifier(const Tensor& x, const LinearSpec& spec) {
  if (x.shape().back() != spec.in_dim)
    throw std::invalid_argument("frame_classifier: feature dim mismatch");
  return sigmoid(add_rowvec(matmul(x, spec.weight), spec.bias));
}

Tensor attention_pool(const Tensor& frame_probs, const Tensor& attn_logits) {
  if (frame_probs.ndim() != 3 || attn_logits.ndim() != 3)
    throw std::invalid_argument("attention_pool: need [b,t,c]");
  if (frame_probs.shape() != attn_logits.shape())
    throw std::invalid_argument("attention_pool: shape mismatch");
  if (frame_probs.dim(1) == 0)
    throw std::invalid_argument("attention_pool: empty time axis");
  Tensor weights = softmax_axis(attn_logits, 1);  // over time, per class
  return sum_axis(mul(frame_probs, weights), 1);  // [b,c]
}

Tensor bce_loss(const Tensor& y_hat, const Tensor& y) {
  if (y_hat.shape() != y.shape())
    throw std::invalid_argument("bce_loss: shape mismatch");
  const double eps = 1e-12;
  const auto& pv = y_hat.values();
  const auto& yv = y.values();
  const std::size_t n = pv.size();
  if (n == 0) throw std::invalid_argument("bce_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(pv[i], eps, 1.0 - eps);
    acc -= yv[i] * std::log(p) + (1.0 - yv[i]) * std::log1p(-p);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return make_op(
      "bce_loss", {y_hat, y}, {acc * inv_n}, Shape{1},
      [y_hat, y, eps, inv_n](const std::vector<double>& g) {
        const auto& pv = y_hat.values();
        const auto& yv = y.values();
        for (std::size_t i = 0; i < pv.size(); ++i) {
          if (y_hat.requires_grad()) {
            // clamped region has zero slope
            if (pv[i] > eps && pv[i] < 1.0 - eps) {
              const double p = pv[i];
              y_hat.add_to_grad(
                  i, g[0] * inv_n * (-(yv[i] / p) + (1.0 - yv[i]) / (1.0 - p)));
            }
          }
          if (y.requires_grad()) {
            const double p = std::clamp(pv[i], eps, 1.0 - eps);
            y.add_to_grad(i,
                          g[0] * inv_n * (std::log1p(-p) - std::log(p)));
          }
        }
      });
}

Tensor channels_to_features(const Tensor& x) {
  if (x.ndim() != 4)
    throw std::invalid_argument("channels_to_features: need [b,c,t,f]");
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), F = x.dim(3);
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < F; ++f)
          out[((b * T + t) * C + c) * F + f] = xv[((b * C + c) * T + t) * F + f];
  return make_op("channels_to_features", {x}, std::move(out), {B, T, C * F},
                 [x, B, C, T, F](const std::vector<double>& g) {
                   for (std::size_t b = 0; b < B; ++b)
                     for (std::size_t c = 0; c < C; ++c)
                       for (std::size_t t = 0; t < T; ++t)
                         for (std::size_t f = 0; f < F; ++f)
                           x.add_to_grad(((b * C + c) * T + t) * F + f,
                                         g[((b * T + t) * C + c) * F + f]);
                 });
}

}  // namespace nn
}  // namespace ust
