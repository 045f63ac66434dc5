// ust/nn.h

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

#ifndef UST_NN_H_
#define UST_NN_H_

#include <vector>

#include "ust/tensor.h"

namespace ust {
namespace nn {

// Layer specs own their parameters as leaf tensors; the forward functions
// tape the backward rules through tensor_core. Activations are [batch,
// channels, time, freq] for the conv stack and [batch, time, features] after
// flattening.

struct ConvSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  // kernel fixed at 3x3, stride 1, same padding
  Tensor weight;  // [out, in, 3, 3]
  Tensor bias;    // [out]

  static ConvSpec init(std::size_t in_ch, std::size_t out_ch, Rng* rng);
};

struct PoolSpec {
  std::size_t pool_time = 1;  // 1 or 2
  std::size_t pool_freq = 2;  // 1 or 2
};

struct BatchNormSpec {
  std::size_t n_channels = 0;
  double eps = 1e-5;
  double momentum = 0.1;
  Tensor gamma, beta;                      // learned affine
  std::vector<double> running_mean, running_var;  // inference statistics

  static BatchNormSpec init(std::size_t channels);
};

struct GroupNormSpec {
  std::size_t n_groups = 0;
  std::size_t n_channels = 0;
  double eps = 1e-5;
  Tensor gamma, beta;

  static GroupNormSpec init(std::size_t groups, std::size_t channels);
};

struct GruSpec {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  // forward and backward directions carry independent weights
  struct Direction {
    Tensor w_reset, w_update, w_cand;  // [in, H]
    Tensor u_reset, u_update, u_cand;  // [H, H]
    Tensor b_reset, b_update, b_cand;  // [H]
  };
  Direction fwd, bwd;

  static GruSpec init(std::size_t input_dim, std::size_t hidden_dim, Rng* rng);
};

struct AttentionSpec {
  std::size_t d_model = 0;
  std::size_t n_heads = 0;
  Tensor w_query, w_key, w_value, w_out;  // [d_model, d_model]
  Tensor b_query, b_key, b_value, b_out;  // [d_model]

  std::size_t head_dim() const { return d_model / n_heads; }
  static AttentionSpec init(std::size_t d_model, std::size_t n_heads, Rng* rng);
};

struct LinearSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  static LinearSpec init(std::size_t in_dim, std::size_t out_dim, Rng* rng);
};

// Same-padding 3x3 cross-correlation. x: [b, in_ch, t, f] -> [b, out_ch, t, f].
Tensor conv2d(const Tensor& x, const ConvSpec& spec);

// Non-overlapping window max; extents must divide by the pool factors.
// Gradient flows only to each window's argmax.
Tensor maxpool2d(const Tensor& x, const PoolSpec& spec);

// Per-channel standardization over (batch, time, freq). Training mode uses
// batch statistics and advances the running averages; inference uses the
// running statistics. Training on a batch of one is rejected.
Tensor batch_norm(const Tensor& x, BatchNormSpec* spec, bool training);

// Per-sample, per-group standardization over (group channels, time, freq).
Tensor group_norm(const Tensor& x, const GroupNormSpec& spec);

// x * tanh(softplus(x)) with an overflow-safe softplus.
Tensor mish(const Tensor& x);

// x: [b, t, in] -> [b, t, 2H]; both directions start from a zero state. The
// reset gate scales the previous hidden state before the candidate
// projection (r (.) h) U_cand.
Tensor bigru(const Tensor& x, const GruSpec& spec);

// x: [b, t, d_model] -> same shape; no positional encoding, so the layer is
// permutation-equivariant over frames.
Tensor multi_head_self_attention(const Tensor& x, const AttentionSpec& spec);

// Affine + logistic sigmoid: [b, t, feat] -> [b, t, n_classes] in (0,1).
Tensor frame_classifier(const Tensor& x, const LinearSpec& spec);

// MIL pooling: clip_c = sum_t p[t,c] * softmax_t(z[.,c]). Output lies in
// [min_t p, max_t p] per class.
Tensor attention_pool(const Tensor& frame_probs, const Tensor& attn_logits);

// Mean binary cross-entropy with predictions clamped to [eps, 1-eps].
Tensor bce_loss(const Tensor& y_hat, const Tensor& y);

// [b, c, t, f] -> [b, t, c*f]: per-frame flatten feeding the temporal heads.
Tensor channels_to_features(const Tensor& x);

}  // namespace nn
}  // namespace ust

#endif  // UST_NN_H_
