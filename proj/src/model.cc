// ust/model.cc

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

#include "ust/model.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "ust/checkpoint.h"

namespace ust {

void ExtractorConfig::validate() const {
  if (conv_widths.size() != 5)
    throw ConfigError("ExtractorConfig: exactly 5 conv widths (10 layers)");
  for (std::size_t w : conv_widths)
    if (w == 0) throw ConfigError("ExtractorConfig: zero channel width");
  if (head == Head::kBigru && gru_hidden == 0)
    throw ConfigError("ExtractorConfig: gru_hidden == 0");
  if (head == Head::kMhsa) {
    if (mhsa_heads == 0 || flat_features() % mhsa_heads != 0)
      throw ConfigError("ExtractorConfig: d_model not divisible by heads");
  }
  if (norm == Norm::kGroup) {
    for (std::size_t w : conv_widths)
      if (w % gn_groups != 0 && w != gn_groups)
        throw ConfigError(
            "ExtractorConfig: widths must divide by gn_groups");
  }
}

void DualBackboneConfig::validate() const {
  global.validate();
  specific.validate();
  if (global.head != ExtractorConfig::Head::kBigru)
    throw ConfigError("DualBackboneConfig: global head must be bigru");
  if (specific.head != ExtractorConfig::Head::kMhsa)
    throw ConfigError("DualBackboneConfig: specific head must be mhsa");
  if (n_classes == 0) throw ConfigError("DualBackboneConfig: n_classes == 0");
}

DualBackboneConfig DualBackboneConfig::toy(std::size_t n_classes) {
  DualBackboneConfig cfg;
  cfg.global.conv_widths = {4, 8, 16, 32, 64};
  cfg.global.norm = ExtractorConfig::Norm::kBatch;
  cfg.global.act = ExtractorConfig::Act::kRelu;
  cfg.global.head = ExtractorConfig::Head::kBigru;
  cfg.global.gru_hidden = 32;
  cfg.specific.conv_widths = {4, 8, 16, 32, 64};
  cfg.specific.norm = ExtractorConfig::Norm::kGroup;
  cfg.specific.act = ExtractorConfig::Act::kMish;
  cfg.specific.head = ExtractorConfig::Head::kMhsa;
  cfg.specific.mhsa_heads = 4;
  cfg.specific.gn_groups = 4;
  cfg.n_classes = n_classes;
  return cfg;
}

DualBackboneConfig DualBackboneConfig::tiny(std::size_t n_classes) {
  DualBackboneConfig cfg = toy(n_classes);
  cfg.global.conv_widths = {2, 2, 2, 2, 2};
  cfg.global.gru_hidden = 2;
  cfg.specific.conv_widths = {2, 2, 2, 2, 2};
  cfg.specific.mhsa_heads = 2;  // d_model = 4
  cfg.specific.gn_groups = 2;
  return cfg;
}

DualBackboneModel::Extractor DualBackboneModel::build_extractor(
    const ExtractorConfig& cfg, const std::string& prefix, Rng* rng) {
  (void)prefix;
  Extractor ex;
  ex.cfg = cfg;
  std::size_t in_ch = 1;
  for (std::size_t s = 0; s < 5; ++s) {
    Stage stage;
    const std::size_t out_ch = cfg.conv_widths[s];
    stage.conv1 = nn::ConvSpec::init(in_ch, out_ch, rng);
    stage.conv2 = nn::ConvSpec::init(out_ch, out_ch, rng);
    if (cfg.norm == ExtractorConfig::Norm::kBatch) {
      stage.norm1 = nn::BatchNormSpec::init(out_ch);
      stage.norm2 = nn::BatchNormSpec::init(out_ch);
    } else {
      const std::size_t groups = out_ch % cfg.gn_groups == 0 ? cfg.gn_groups : out_ch;
      stage.norm1 = nn::GroupNormSpec::init(groups, out_ch);
      stage.norm2 = nn::GroupNormSpec::init(groups, out_ch);
    }
    stage.pool.pool_time = s < 2 ? 2 : 1;  // first two stages halve the frame rate
    stage.pool.pool_freq = 2;
    ex.stages.push_back(std::move(stage));
    in_ch = out_ch;
  }
  if (cfg.head == ExtractorConfig::Head::kBigru)
    ex.gru = std::make_unique<nn::GruSpec>(
        nn::GruSpec::init(cfg.flat_features(), cfg.gru_hidden, rng));
  else
    ex.attention = std::make_unique<nn::AttentionSpec>(
        nn::AttentionSpec::init(cfg.flat_features(), cfg.mhsa_heads, rng));
  return ex;
}

namespace {

void add_param(std::vector<NamedParam>* params, const std::string& name,
               Tensor t, ParamRole role = ParamRole::kOther) {
  params->push_back({name, std::move(t), role});
}

}  // namespace

void DualBackboneModel::register_params(const std::string& prefix,
                                        Extractor* ex) {
  for (std::size_t s = 0; s < ex->stages.size(); ++s) {
    Stage& st = ex->stages[s];
    const std::string sp = prefix + ".stage" + std::to_string(s + 1);
    add_param(&params_, sp + ".conv1.weight", st.conv1.weight,
              ParamRole::kConvWeight);
    add_param(&params_, sp + ".conv1.bias", st.conv1.bias);
    add_param(&params_, sp + ".conv2.weight", st.conv2.weight,
              ParamRole::kConvWeight);
    add_param(&params_, sp + ".conv2.bias", st.conv2.bias);
    for (int ni = 1; ni <= 2; ++ni) {
      auto& norm = ni == 1 ? st.norm1 : st.norm2;
      const std::string np = sp + ".norm" + std::to_string(ni);
      if (auto* bn = std::get_if<nn::BatchNormSpec>(&norm)) {
        add_param(&params_, np + ".gamma", bn->gamma);
        add_param(&params_, np + ".beta", bn->beta);
      } else {
        auto& gn = std::get<nn::GroupNormSpec>(norm);
        add_param(&params_, np + ".gamma", gn.gamma);
        add_param(&params_, np + ".beta", gn.beta);
      }
    }
  }
  if (ex->gru) {
    auto reg_dir = [&](const char* dname, nn::GruSpec::Direction& d) {
      const std::string dp = prefix + ".gru." + dname;
      add_param(&params_, dp + ".w_reset", d.w_reset);
      add_param(&params_, dp + ".w_update", d.w_update);
      add_param(&params_, dp + ".w_cand", d.w_cand);
      add_param(&params_, dp + ".u_reset", d.u_reset);
      add_param(&params_, dp + ".u_update", d.u_update);
      add_param(&params_, dp + ".u_cand", d.u_cand);
      add_param(&params_, dp + ".b_reset", d.b_reset);
      add_param(&params_, dp + ".b_update", d.b_update);
      add_param(&params_, dp + ".b_cand", d.b_cand);
    };
    reg_dir("fwd", ex->gru->fwd);
    reg_dir("bwd", ex->gru->bwd);
  }
  if (ex->attention) {
    const std::string ap = prefix + ".attn";
    add_param(&params_, ap + ".w_query", ex->attention->w_query);
    add_param(&params_, ap + ".w_key", ex->attention->w_key);
    add_param(&params_, ap + ".w_value", ex->attention->w_value);
    add_param(&params_, ap + ".w_out", ex->attention->w_out);
    add_param(&params_, ap + ".b_query", ex->attention->b_query);
    add_param(&params_, ap + ".b_key", ex->attention->b_key);
    add_param(&params_, ap + ".b_value", ex->attention->b_value);
    add_param(&params_, ap + ".b_out", ex->attention->b_out);
  }
}

DualBackboneModel::DualBackboneModel(DualBackboneConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.init_seed);
  global_ = build_extractor(cfg_.global, "global", &rng);
  specific_ = build_extractor(cfg_.specific, "specific", &rng);
  const std::size_t feat =
      cfg_.global.head_features() + cfg_.specific.head_features();
  classifier_ = nn::LinearSpec::init(feat, cfg_.n_classes, &rng);
  attn_head_ = nn::LinearSpec::init(feat, cfg_.n_classes, &rng);

  register_params("global", &global_);
  register_params("specific", &specific_);
  add_param(&params_, "classifier.weight", classifier_.weight);
  add_param(&params_, "classifier.bias", classifier_.bias);
  add_param(&params_, "attn_head.weight", attn_head_.weight);
  add_param(&params_, "attn_head.bias", attn_head_.bias);

  if (cfg_.freeze_global) set_global_frozen(true);
}

Tensor DualBackboneModel::extractor_forward(Extractor* ex, const Tensor& x,
                                            bool training) {
  if (x.ndim() != 4 || x.dim(1) != 1)
    throw std::invalid_argument("extractor: need [b,1,frames,mels]");
  if (x.dim(3) != 64)
    throw std::invalid_argument("extractor: expected 64 mel bins, got " +
                                std::to_string(x.dim(3)));
  if (x.dim(2) % 4 != 0)
    throw std::invalid_argument("extractor: frame count must divide by 4");

  const bool frozen = ex == &global_ && frozen_global_;
  Tensor h = x;
  for (auto& stage : ex->stages) {
    auto apply_norm = [&](Tensor t, std::variant<nn::BatchNormSpec,
                                                 nn::GroupNormSpec>* norm) {
      if (auto* bn = std::get_if<nn::BatchNormSpec>(norm))
        return nn::batch_norm(t, bn, training && !frozen);
      return nn::group_norm(t, std::get<nn::GroupNormSpec>(*norm));
    };
    auto activate = [&](Tensor t) {
      return ex->cfg.act == ExtractorConfig::Act::kMish ? nn::mish(t)
                                                        : relu(t);
    };
    h = activate(apply_norm(nn::conv2d(h, stage.conv1), &stage.norm1));
    h = activate(apply_norm(nn::conv2d(h, stage.conv2), &stage.norm2));
    h = nn::maxpool2d(h, stage.pool);
  }
  h = nn::channels_to_features(h);  // [b, T/4, widths[4]*2]
  if (ex->gru) return nn::bigru(h, *ex->gru);
  return nn::multi_head_self_attention(h, *ex->attention);
}

DualBackboneModel::BatchOutput DualBackboneModel::forward(const Tensor& x,
                                                          bool training) {
  Tensor gfeat = extractor_forward(&global_, x, training);
  Tensor sfeat = extractor_forward(&specific_, x, training);
  if (gfeat.dim(1) != sfeat.dim(1))
    throw std::invalid_argument("model: extractor temporal extents differ");
  Tensor feat = concat_lastdim(gfeat, sfeat);
  BatchOutput out;
  out.frame_probs = nn::frame_classifier(feat, classifier_);
  Tensor logits = add_rowvec(matmul(feat, attn_head_.weight), attn_head_.bias);
  out.clip_probs = nn::attention_pool(out.frame_probs, logits);
  return out;
}

ClipPrediction DualBackboneModel::predict(const LogMelSpectrogram& s) {
  if (s.n_mels != 64)
    throw DataError("predict: expected 64 mel bins");
  GradMode off(false);
  // right-pad to a frame count divisible by 4 using the log floor
  const std::size_t frames = s.n_frames;
  const std::size_t padded = (frames + 3) / 4 * 4;
  std::vector<double> data(padded * 64, std::log(s.config.log_floor));
  std::copy(s.data.begin(), s.data.end(), data.begin());
  Tensor x = Tensor::from(std::move(data), {1, 1, padded, 64});
  BatchOutput out = forward(x, /*training=*/false);
  ClipPrediction pred;
  pred.n_frames = out.frame_probs.dim(1);
  pred.n_classes = cfg_.n_classes;
  pred.frame_probs = out.frame_probs.values();
  pred.clip_probs = out.clip_probs.values();
  return pred;
}

std::vector<std::pair<std::string, std::vector<double>>>
DualBackboneModel::state_blobs() const {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (const auto& p : params_) out.push_back({p.name, p.tensor.values()});
  // batch-norm running statistics ride along as buffers
  auto add_buffers = [&](const char* prefix, const Extractor& ex) {
    for (std::size_t s = 0; s < ex.stages.size(); ++s) {
      for (int ni = 1; ni <= 2; ++ni) {
        const auto& norm = ni == 1 ? ex.stages[s].norm1 : ex.stages[s].norm2;
        if (const auto* bn = std::get_if<nn::BatchNormSpec>(&norm)) {
          const std::string np = std::string(prefix) + ".stage" +
                                 std::to_string(s + 1) + ".norm" +
                                 std::to_string(ni);
          out.push_back({np + ".running_mean", bn->running_mean});
          out.push_back({np + ".running_var", bn->running_var});
        }
      }
    }
  };
  add_buffers("global", global_);
  add_buffers("specific", specific_);
  return out;
}

void DualBackboneModel::save(const std::string& path) const {
  std::vector<CheckpointEntry> entries;
  for (const auto& p : params_)
    entries.push_back({p.name, p.tensor.shape(), p.tensor.values()});
  for (const auto& [name, values] : state_blobs()) {
    // skip entries already covered by params_
    bool is_param = false;
    for (const auto& p : params_)
      if (p.name == name) {
        is_param = true;
        break;
      }
    if (!is_param) entries.push_back({name, Shape{values.size()}, values});
  }
  save_checkpoint(path, entries);
}

void DualBackboneModel::load(const std::string& path) {
  auto entries = load_checkpoint(path);
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;

  for (auto& p : params_) {
    auto it = by_name.find(p.name);
    if (it == by_name.end())
      throw DataError("checkpoint missing tensor " + p.name);
    if (it->second->shape != p.tensor.shape())
      throw DataError("checkpoint shape mismatch for " + p.name + ": got " +
                      shape_str(it->second->shape) + ", want " +
                      shape_str(p.tensor.shape()));
    p.tensor.leaf_values() = it->second->values;
  }
  // restore running stats where present
  auto restore_buffers = [&](const char* prefix, Extractor* ex) {
    for (std::size_t s = 0; s < ex->stages.size(); ++s) {
      for (int ni = 1; ni <= 2; ++ni) {
        auto& norm = ni == 1 ? ex->stages[s].norm1 : ex->stages[s].norm2;
        if (auto* bn = std::get_if<nn::BatchNormSpec>(&norm)) {
          const std::string np = std::string(prefix) + ".stage" +
                                 std::to_string(s + 1) + ".norm" +
                                 std::to_string(ni);
          auto mi = by_name.find(np + ".running_mean");
          auto vi = by_name.find(np + ".running_var");
          if (mi != by_name.end()) bn->running_mean = mi->second->values;
          if (vi != by_name.end()) bn->running_var = vi->second->values;
        }
      }
    }
  };
  restore_buffers("global", &global_);
  restore_buffers("specific", &specific_);
}

void DualBackboneModel::load_pretrained_global(const std::string& path) {
  auto entries = load_checkpoint(path);
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;

  for (auto& p : params_) {
    if (p.name.rfind("global.", 0) != 0) continue;
    auto it = by_name.find(p.name);
    if (it == by_name.end())
      throw DataError("pretrained checkpoint missing tensor " + p.name);
    if (it->second->shape != p.tensor.shape())
      throw DataError("pretrained checkpoint shape mismatch for " + p.name +
                      ": got " + shape_str(it->second->shape) + ", want " +
                      shape_str(p.tensor.shape()));
    p.tensor.leaf_values() = it->second->values;
  }
  for (std::size_t s = 0; s < global_.stages.size(); ++s) {
    for (int ni = 1; ni <= 2; ++ni) {
      auto& norm = ni == 1 ? global_.stages[s].norm1 : global_.stages[s].norm2;
      if (auto* bn = std::get_if<nn::BatchNormSpec>(&norm)) {
        const std::string np =
            "global.stage" + std::to_string(s + 1) + ".norm" + std::to_string(ni);
        auto mi = by_name.find(np + ".running_mean");
        auto vi = by_name.find(np + ".running_var");
        if (mi != by_name.end()) bn->running_mean = mi->second->values;
        if (vi != by_name.end()) bn->running_var = vi->second->values;
      }
    }
  }
  if (cfg_.freeze_global) set_global_frozen(true);
}

void DualBackboneModel::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void DualBackboneModel::set_global_frozen(bool frozen) {
  frozen_global_ = frozen;
  for (auto& p : params_) {
    if (p.name.rfind("global.", 0) == 0) p.tensor.set_requires_grad(!frozen);
  }
}

Tensor DualBackboneModel::global_features(const Tensor& x, bool training) {
  return extractor_forward(&global_, x, training);
}

Tensor DualBackboneModel::specific_features(const Tensor& x, bool training) {
  return extractor_forward(&specific_, x, training);
}

}  // namespace ust
