// ust/config.cc

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

#include "ust/config.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ust {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ','))
    out.push_back(static_cast<std::size_t>(std::stoul(trim(tok))));
  return out;
}

std::string widths_str(const std::vector<std::size_t>& w) {
  std::ostringstream os;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) os << ",";
    os << w[i];
  }
  return os.str();
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
  ConfigMap map;
  std::istringstream is(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": unterminated section");
      section = trim(t.substr(1, t.size() - 2));
      map.sections_[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    if (section.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": key outside any [section]");
    map.sections_[section][trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return map;
}

ConfigMap ConfigMap::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return parse(text);
}

bool ConfigMap::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string ConfigMap::get(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double ConfigMap::get_num(const std::string& section, const std::string& key,
                          double fallback) const {
  const std::string v = get(section, key, "");
  if (v.empty()) return fallback;
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw ConfigError("config: " + section + "." + key +
                      " is not numeric: " + v);
  }
}

bool ConfigMap::get_bool(const std::string& section, const std::string& key,
                         bool fallback) const {
  std::string v = get(section, key, "");
  if (v.empty()) return fallback;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: " + section + "." + key + " is not boolean: " + v);
}

void ConfigMap::set(const std::string& section, const std::string& key,
                    const std::string& value) {
  sections_[section][key] = value;
}

void ConfigMap::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like section.key=value: " +
                      assignment);
  const std::string dotted = trim(assignment.substr(0, eq));
  const auto dot = dotted.find('.');
  if (dot == std::string::npos)
    throw ConfigError("override key must be dotted (section.key): " + dotted);
  set(dotted.substr(0, dot), dotted.substr(dot + 1),
      trim(assignment.substr(eq + 1)));
}

std::string ConfigMap::to_string() const {
  std::ostringstream os;
  for (const auto& [section, kv] : sections_) {
    os << "[" << section << "]\n";
    for (const auto& [key, value] : kv) os << key << " = " << value << "\n";
    os << "\n";
  }
  return os.str();
}

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& m) {
  ExperimentConfig c;
  c.manifest_path = m.get("dataset", "manifest", "");
  c.target_samples =
      static_cast<std::size_t>(m.get_num("dataset", "target_samples", 0));

  c.spectrogram.n_fft = static_cast<int>(m.get_num("spectrogram", "n_fft", 2822));
  c.spectrogram.hop_length =
      static_cast<int>(m.get_num("spectrogram", "hop_length", 1103));
  c.spectrogram.n_mels = static_cast<int>(m.get_num("spectrogram", "n_mels", 64));
  c.spectrogram.f_min = m.get_num("spectrogram", "f_min", 0.0);
  c.spectrogram.f_max = m.get_num("spectrogram", "f_max", 8000.0);
  c.spectrogram.target_sample_rate =
      static_cast<int>(m.get_num("spectrogram", "sample_rate", 44100));
  c.spectrogram.log_floor = m.get_num("spectrogram", "log_floor", 1e-10);
  c.spectrogram.htk_mel = m.get_bool("spectrogram", "htk_mel", false);

  c.augment.n_freq_masks = static_cast<int>(m.get_num("augment", "n_freq_masks", 2));
  c.augment.max_freq_width =
      static_cast<int>(m.get_num("augment", "max_freq_width", 8));
  c.augment.n_time_masks = static_cast<int>(m.get_num("augment", "n_time_masks", 2));
  c.augment.max_time_width =
      static_cast<int>(m.get_num("augment", "max_time_width", 8));
  c.augment.time_warp_w = static_cast<int>(m.get_num("augment", "time_warp_w", 0));
  c.augment.mixup_enabled = m.get_bool("augment", "mixup_enabled", false);
  c.augment.mixup_alpha = m.get_num("augment", "mixup_alpha", 1.0);
  c.augment.cutout_max_h = static_cast<int>(m.get_num("augment", "cutout_max_h", 0));
  c.augment.cutout_max_w = static_cast<int>(m.get_num("augment", "cutout_max_w", 0));
  c.augment.fill_with_mean = m.get_bool("augment", "fill_with_mean", false);

  c.global_widths = parse_widths(m.get("model", "global_widths", "4,8,16,32,64"));
  c.specific_widths =
      parse_widths(m.get("model", "specific_widths", "4,8,16,32,64"));
  c.gru_hidden = static_cast<std::size_t>(m.get_num("model", "gru_hidden", 32));
  c.mhsa_heads = static_cast<std::size_t>(m.get_num("model", "mhsa_heads", 4));
  c.gn_groups = static_cast<std::size_t>(m.get_num("model", "gn_groups", 4));
  c.freeze_global = m.get_bool("model", "freeze_global", false);
  c.pretrained_global = m.get("model", "pretrained_global", "");

  c.optimizer.lr = m.get_num("optimizer", "lr", 1e-3);
  c.optimizer.beta1 = m.get_num("optimizer", "beta1", 0.9);
  c.optimizer.beta2 = m.get_num("optimizer", "beta2", 0.999);
  c.optimizer.eps = m.get_num("optimizer", "eps", 1e-8);
  c.optimizer.weight_decay = m.get_num("optimizer", "weight_decay", 0.0);
  c.optimizer.gc_enabled = m.get_bool("optimizer", "gc_enabled", true);
  c.optimizer.grad_clip = m.get_num("optimizer", "grad_clip", 0.0);

  c.relabel.aggregation_threshold =
      m.get_num("relabel", "aggregation_threshold", 0.5);
  c.relabel.relabel_threshold = m.get_num("relabel", "relabel_threshold", 0.5);

  c.train.epochs = static_cast<std::size_t>(m.get_num("train", "epochs", 20));
  c.train.batch_size =
      static_cast<std::size_t>(m.get_num("train", "batch_size", 8));
  c.train.seed = static_cast<std::uint64_t>(m.get_num("train", "seed", 42));
  c.train.max_steps = static_cast<std::size_t>(m.get_num("train", "max_steps", 0));
  c.train.augment = m.get_bool("train", "augment", false);
  c.train.checkpoint_metric = m.get("train", "checkpoint_metric", "auto");

  c.out_dir = m.get("output", "dir", "runs/exp");
  c.cache_dir = m.get("output", "cache_dir", "");
  return c;
}

ExperimentConfig ExperimentConfig::load(
    const std::string& path, const std::vector<std::string>& overrides) {
  ConfigMap m = ConfigMap::load(path);
  for (const auto& o : overrides) m.apply_override(o);
  ExperimentConfig c = from_map(m);
  c.validate();
  return c;
}

ConfigMap ExperimentConfig::to_map() const {
  ConfigMap m;
  m.set("dataset", "manifest", manifest_path);
  m.set("dataset", "target_samples", std::to_string(target_samples));
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  m.set("spectrogram", "n_fft", std::to_string(spectrogram.n_fft));
  m.set("spectrogram", "hop_length", std::to_string(spectrogram.hop_length));
  m.set("spectrogram", "n_mels", std::to_string(spectrogram.n_mels));
  m.set("spectrogram", "f_min", num(spectrogram.f_min));
  m.set("spectrogram", "f_max", num(spectrogram.f_max));
  m.set("spectrogram", "sample_rate",
        std::to_string(spectrogram.target_sample_rate));
  m.set("spectrogram", "log_floor", num(spectrogram.log_floor));
  m.set("spectrogram", "htk_mel", spectrogram.htk_mel ? "true" : "false");
  m.set("augment", "n_freq_masks", std::to_string(augment.n_freq_masks));
  m.set("augment", "max_freq_width", std::to_string(augment.max_freq_width));
  m.set("augment", "n_time_masks", std::to_string(augment.n_time_masks));
  m.set("augment", "max_time_width", std::to_string(augment.max_time_width));
  m.set("augment", "time_warp_w", std::to_string(augment.time_warp_w));
  m.set("augment", "mixup_enabled", augment.mixup_enabled ? "true" : "false");
  m.set("augment", "mixup_alpha", num(augment.mixup_alpha));
  m.set("augment", "cutout_max_h", std::to_string(augment.cutout_max_h));
  m.set("augment", "cutout_max_w", std::to_string(augment.cutout_max_w));
  m.set("augment", "fill_with_mean", augment.fill_with_mean ? "true" : "false");
  m.set("model", "global_widths", widths_str(global_widths));
  m.set("model", "specific_widths", widths_str(specific_widths));
  m.set("model", "gru_hidden", std::to_string(gru_hidden));
  m.set("model", "mhsa_heads", std::to_string(mhsa_heads));
  m.set("model", "gn_groups", std::to_string(gn_groups));
  m.set("model", "freeze_global", freeze_global ? "true" : "false");
  m.set("model", "pretrained_global", pretrained_global);
  m.set("optimizer", "lr", num(optimizer.lr));
  m.set("optimizer", "beta1", num(optimizer.beta1));
  m.set("optimizer", "beta2", num(optimizer.beta2));
  m.set("optimizer", "eps", num(optimizer.eps));
  m.set("optimizer", "weight_decay", num(optimizer.weight_decay));
  m.set("optimizer", "gc_enabled", optimizer.gc_enabled ? "true" : "false");
  m.set("optimizer", "grad_clip", num(optimizer.grad_clip));
  m.set("relabel", "aggregation_threshold", num(relabel.aggregation_threshold));
  m.set("relabel", "relabel_threshold", num(relabel.relabel_threshold));
  m.set("train", "epochs", std::to_string(train.epochs));
  m.set("train", "batch_size", std::to_string(train.batch_size));
  m.set("train", "seed", std::to_string(train.seed));
  m.set("train", "max_steps", std::to_string(train.max_steps));
  m.set("train", "augment", train.augment ? "true" : "false");
  m.set("train", "checkpoint_metric", train.checkpoint_metric);
  m.set("output", "dir", out_dir);
  m.set("output", "cache_dir", cache_dir);
  return m;
}

FeaturizeSpec ExperimentConfig::featurize_spec() const {
  FeaturizeSpec spec;
  spec.spectrogram = spectrogram;
  spec.target_samples = target_samples;
  return spec;
}

DualBackboneConfig ExperimentConfig::model_config(const Taxonomy& taxonomy) const {
  DualBackboneConfig cfg;
  cfg.global.conv_widths = global_widths;
  cfg.global.norm = ExtractorConfig::Norm::kBatch;
  cfg.global.act = ExtractorConfig::Act::kRelu;
  cfg.global.head = ExtractorConfig::Head::kBigru;
  cfg.global.gru_hidden = gru_hidden;
  cfg.specific.conv_widths = specific_widths;
  cfg.specific.norm = ExtractorConfig::Norm::kGroup;
  cfg.specific.act = ExtractorConfig::Act::kMish;
  cfg.specific.head = ExtractorConfig::Head::kMhsa;
  cfg.specific.mhsa_heads = mhsa_heads;
  cfg.specific.gn_groups = gn_groups;
  cfg.n_classes = taxonomy.n_coarse() + taxonomy.n_fine();
  cfg.freeze_global = freeze_global;
  cfg.init_seed = train.seed;
  return cfg;
}

std::string ExperimentConfig::resolved_cache_dir() const {
  if (!cache_dir.empty()) return cache_dir;
  return (std::filesystem::path(out_dir) / "cache").string();
}

std::string ExperimentConfig::resolved_checkpoint_metric(
    const Taxonomy& taxonomy, TaskMode mode) const {
  if (train.checkpoint_metric != "auto") return train.checkpoint_metric;
  if (mode == TaskMode::kSingleLabel) return "mono.accuracy";
  if (taxonomy.hierarchical()) return "coarse.auprc_macro";
  return "mono.auprc_macro";
}

void ExperimentConfig::validate() const {
  spectrogram.validate();
  optimizer.validate();
  relabel.validate();
  if (train.batch_size == 0) throw ConfigError("train.batch_size must be > 0");
  if (global_widths.size() != 5 || specific_widths.size() != 5)
    throw ConfigError("model widths must list 5 stages");
}

}  // namespace ust
