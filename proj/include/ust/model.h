// ust/model.h

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

#ifndef UST_MODEL_H_
#define UST_MODEL_H_

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ust/dsp.h"
#include "ust/nn.h"
#include "ust/optimizer.h"

namespace ust {

// One feature-extractor backbone: 10 3x3 conv layers in 5 width stages, a
// norm + activation after each conv, and a max pool per stage. Stages 1-2
// pool time and frequency; stages 3-5 pool frequency only, so a T x 64 input
// leaves as T/4 frames of widths[4]*2 features before the temporal head.
struct ExtractorConfig {
  std::vector<std::size_t> conv_widths = {32, 64, 128, 256, 512};
  enum class Norm { kBatch, kGroup } norm = Norm::kBatch;
  enum class Act { kRelu, kMish } act = Act::kRelu;
  enum class Head { kBigru, kMhsa } head = Head::kBigru;
  std::size_t gru_hidden = 64;   // bigru head
  std::size_t mhsa_heads = 4;    // mhsa head; d_model = widths[4]*2
  std::size_t gn_groups = 4;

  std::size_t flat_features() const { return conv_widths.back() * 2; }
  std::size_t head_features() const {
    return head == Head::kBigru ? 2 * gru_hidden : flat_features();
  }
  void validate() const;
};

struct DualBackboneConfig {
  ExtractorConfig global;    // BN + ReLU + BiGRU
  ExtractorConfig specific;  // GN + Mish + MHSA
  std::size_t n_classes = 8;
  bool freeze_global = false;
  std::uint64_t init_seed = 1;

  void validate() const;
  static DualBackboneConfig toy(std::size_t n_classes);   // widths 4..64
  static DualBackboneConfig tiny(std::size_t n_classes);  // widths all 2
};

struct ClipPrediction {
  std::size_t n_frames = 0;
  std::size_t n_classes = 0;
  std::vector<double> frame_probs;  // frames x classes
  std::vector<double> clip_probs;   // classes
};

class DualBackboneModel {
 public:
  explicit DualBackboneModel(DualBackboneConfig cfg);

  struct BatchOutput {
    Tensor frame_probs;  // [b, t/4, n_classes]
    Tensor clip_probs;   // [b, n_classes]
  };
  // x: [b, 1, frames, 64]; frames must divide by 4 (the harness pads).
  BatchOutput forward(const Tensor& x, bool training);

  // Per-backbone features after the temporal head: [b, frames/4, head dim].
  Tensor global_features(const Tensor& x, bool training);
  Tensor specific_features(const Tensor& x, bool training);

  // Single-clip inference; pads frames to a multiple of 4 with the log floor.
  ClipPrediction predict(const LogMelSpectrogram& s);

  std::vector<NamedParam>& parameters() { return params_; }
  const DualBackboneConfig& config() const { return cfg_; }

  // Every parameter plus the batch-norm running statistics.
  std::vector<std::pair<std::string, std::vector<double>>> state_blobs() const;

  void save(const std::string& path) const;
  void load(const std::string& path);
  // Replaces "global." tensors from a shape-compatible checkpoint; applies
  // cfg.freeze_global afterwards. Mismatches name the offending tensor.
  void load_pretrained_global(const std::string& path);

  void zero_grad();
  void set_global_frozen(bool frozen);
  bool global_frozen() const { return frozen_global_; }

  struct Stage {
    nn::ConvSpec conv1, conv2;
    std::variant<nn::BatchNormSpec, nn::GroupNormSpec> norm1, norm2;
    nn::PoolSpec pool;
  };
  struct Extractor {
    ExtractorConfig cfg;
    std::vector<Stage> stages;
    std::unique_ptr<nn::GruSpec> gru;
    std::unique_ptr<nn::AttentionSpec> attention;
  };

 private:
  Extractor build_extractor(const ExtractorConfig& cfg, const std::string& prefix,
                            Rng* rng);
  Tensor extractor_forward(Extractor* ex, const Tensor& x, bool training);
  void register_params(const std::string& prefix, Extractor* ex);

  DualBackboneConfig cfg_;
  Extractor global_, specific_;
  nn::LinearSpec classifier_;  // frame probabilities
  nn::LinearSpec attn_head_;   // pooling logits
  std::vector<NamedParam> params_;
  bool frozen_global_ = false;
};

}  // namespace ust

#endif  // UST_MODEL_H_
