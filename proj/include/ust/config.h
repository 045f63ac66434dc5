// ust/config.h

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

#ifndef UST_CONFIG_H_
#define UST_CONFIG_H_

#include <map>
#include <string>
#include <vector>

#include "ust/augment.h"
#include "ust/data.h"
#include "ust/model.h"
#include "ust/optimizer.h"
#include "ust/relabel.h"

namespace ust {

// Sectioned key = value text. Every key is overridable on the command line
// by its dotted name (section.key=value).
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text);
  static ConfigMap load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_num(const std::string& section, const std::string& key,
                 double fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  void set(const std::string& section, const std::string& key,
           const std::string& value);
  // "section.key=value"
  void apply_override(const std::string& assignment);

  std::string to_string() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct TrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  std::uint64_t seed = 42;
  std::size_t max_steps = 0;  // 0: no cap
  bool augment = false;
  std::string checkpoint_metric = "auto";
};

struct ExperimentConfig {
  std::string manifest_path;
  std::size_t target_samples = 0;
  SpectrogramConfig spectrogram;
  AugmentPolicy augment;
  // model
  std::vector<std::size_t> global_widths = {4, 8, 16, 32, 64};
  std::vector<std::size_t> specific_widths = {4, 8, 16, 32, 64};
  std::size_t gru_hidden = 32;
  std::size_t mhsa_heads = 4;
  std::size_t gn_groups = 4;
  bool freeze_global = false;
  std::string pretrained_global;  // optional checkpoint path
  OptimizerConfig optimizer;
  RelabelConfig relabel;
  TrainOptions train;
  std::string out_dir = "runs/exp";
  std::string cache_dir;  // defaults to <out_dir>/cache

  static ExperimentConfig from_map(const ConfigMap& map);
  static ExperimentConfig load(const std::string& path,
                               const std::vector<std::string>& overrides = {});
  ConfigMap to_map() const;

  FeaturizeSpec featurize_spec() const;
  DualBackboneConfig model_config(const Taxonomy& taxonomy) const;
  std::string resolved_cache_dir() const;
  // "auto" resolves against the taxonomy and task mode.
  std::string resolved_checkpoint_metric(const Taxonomy& taxonomy,
                                         TaskMode mode) const;
  void validate() const;
};

}  // namespace ust

#endif  // UST_CONFIG_H_
