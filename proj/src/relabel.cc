// ust/relabel.cc

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

#include "ust/relabel.h"

#include <fstream>
#include <sstream>

namespace ust {

AnnotationSet AnnotationSet::load(const std::string& path, std::size_t n_fine) {
  std::ifstream f(path);
  if (!f) throw DataError("annotations: cannot open " + path);
  AnnotationSet set;
  std::map<std::string, std::map<std::string, std::vector<int>>> raw;
  std::string line;
  bool header = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("sample_id", 0) == 0) continue;
    }
    std::istringstream ls(line);
    std::string sample, annotator, class_s, vote_s;
    if (!std::getline(ls, sample, '\t') || !std::getline(ls, annotator, '\t') ||
        !std::getline(ls, class_s, '\t') || !std::getline(ls, vote_s, '\t'))
      throw DataError("annotations: malformed row: " + line);
    const auto c = static_cast<std::size_t>(std::stoul(class_s));
    if (c >= n_fine)
      throw DataError("annotations: class id out of range: " + class_s);
    auto& votes = raw[sample][annotator];
    if (votes.empty()) votes.assign(n_fine, 0);
    votes[c] = std::stoi(vote_s) != 0 ? 1 : 0;
  }
  for (auto& [sample, annotators] : raw) {
    SampleVotes sv;
    for (auto& [annotator, votes] : annotators) {
      if (annotator == "expert") {
        sv.expert = true;
        sv.expert_labels = votes;
      } else {
        sv.votes.push_back(votes);
      }
    }
    if (sv.votes.size() > 3)
      throw DataError("annotations: more than 3 annotators for " + sample);
    set.by_sample[sample] = std::move(sv);
  }
  return set;
}

void AnnotationSet::save(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("annotations: cannot write " + path);
  f << "sample_id\tannotator_id\tclass_id\tvote\n";
  for (const auto& [sample, sv] : by_sample) {
    if (sv.expert) {
      for (std::size_t c = 0; c < sv.expert_labels.size(); ++c)
        f << sample << "\texpert\t" << c << "\t" << sv.expert_labels[c] << "\n";
    }
    for (std::size_t a = 0; a < sv.votes.size(); ++a)
      for (std::size_t c = 0; c < sv.votes[a].size(); ++c)
        f << sample << "\tannotator_" << a << "\t" << c << "\t"
          << sv.votes[a][c] << "\n";
  }
}

void RelabelConfig::validate() const {
  if (aggregation_threshold <= 0.0 || aggregation_threshold >= 1.0 ||
      relabel_threshold <= 0.0 || relabel_threshold >= 1.0)
    throw ConfigError("RelabelConfig: thresholds must lie in (0,1)");
}

ClipLabel aggregate_annotations(const SampleVotes& votes,
                                const Taxonomy& taxonomy,
                                const RelabelConfig& cfg) {
  cfg.validate();
  ClipLabel out;
  if (votes.expert) {
    if (votes.expert_labels.size() != taxonomy.n_fine())
      throw DataError("aggregate_annotations: expert label width mismatch");
    out.fine = votes.expert_labels;
  } else {
    if (votes.votes.empty())
      throw DataError("aggregate_annotations: empty annotation set");
    out.fine.assign(taxonomy.n_fine(), 0);
    for (std::size_t c = 0; c < taxonomy.n_fine(); ++c) {
      double mean = 0.0;
      for (const auto& v : votes.votes) mean += v[c];
      mean /= static_cast<double>(votes.votes.size());
      out.fine[c] = mean >= cfg.aggregation_threshold ? 1 : 0;
    }
  }
  out.coarse = taxonomy.coarse_from_fine(out.fine);
  return out;
}

int select_best_checkpoint(const std::vector<std::pair<int, double>>& history) {
  if (history.empty())
    throw DataError("select_best_checkpoint: empty history");
  int best_step = history[0].first;
  double best = history[0].second;
  for (const auto& [step, value] : history) {
    if (value > best) {  // strict: ties keep the earliest step
      best = value;
      best_step = step;
    }
  }
  return best_step;
}

DatasetManifest relabel_dataset(const PredictFn& predict,
                                const DatasetManifest& manifest,
                                const AnnotationSet& annotations,
                                const Taxonomy& taxonomy,
                                const RelabelConfig& cfg, RelabelStats* stats) {
  cfg.validate();
  DatasetManifest out = manifest;
  RelabelStats local;
  local.per_class_flips.assign(taxonomy.n_fine(), 0);

  for (auto& entry : out.entries) {
    ++local.samples_seen;
    const auto it = annotations.by_sample.find(entry.sample_id);
    const bool expert = it != annotations.by_sample.end() && it->second.expert;
    if (expert) {
      ++local.protected_samples;
      continue;  // byte-identical passthrough
    }
    std::vector<double> probs = predict(entry);
    if (probs.size() != taxonomy.n_fine())
      throw DataError("relabel_dataset: prediction width mismatch for " +
                      entry.sample_id);
    std::vector<int> fresh(taxonomy.n_fine(), 0);
    for (std::size_t c = 0; c < fresh.size(); ++c)
      fresh[c] = probs[c] >= cfg.relabel_threshold ? 1 : 0;
    bool changed = false;
    for (std::size_t c = 0; c < fresh.size(); ++c) {
      if (fresh[c] != entry.fine_labels[c]) {
        ++local.per_class_flips[c];
        changed = true;
      }
    }
    if (changed) ++local.samples_changed;
    entry.fine_labels = std::move(fresh);
  }
  if (stats) *stats = std::move(local);
  return out;
}

}  // namespace ust
