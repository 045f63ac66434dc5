// ust/relabel.h

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

#ifndef UST_RELABEL_H_
#define UST_RELABEL_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ust/data.h"
#include "ust/taxonomy.h"

namespace ust {

struct ClipLabel {
  std::vector<int> fine;
  std::vector<int> coarse;  // OR over each coarse class's fine children
};

// Crowdsourced votes for one sample: up to three annotator vectors over fine
// classes, plus an optional expert vector that always wins.
struct SampleVotes {
  std::vector<std::vector<int>> votes;
  bool expert = false;
  std::vector<int> expert_labels;
};

struct AnnotationSet {
  std::map<std::string, SampleVotes> by_sample;

  // Delimited rows: sample_id, annotator_id, class_id, vote. Expert rows
  // carry annotator_id "expert".
  static AnnotationSet load(const std::string& path, std::size_t n_fine);
  void save(const std::string& path) const;
};

struct RelabelConfig {
  double aggregation_threshold = 0.5;
  double relabel_threshold = 0.5;
  std::string checkpoint_metric = "auprc_macro_coarse";

  void validate() const;
};

// Expert samples return their expert labels verbatim; otherwise a fine class
// is positive iff the annotator vote mean reaches the threshold. Coarse
// labels follow by taxonomy OR.
ClipLabel aggregate_annotations(const SampleVotes& votes,
                                const Taxonomy& taxonomy,
                                const RelabelConfig& cfg);

// Earliest step attaining the maximum validation value.
int select_best_checkpoint(const std::vector<std::pair<int, double>>& history);

struct RelabelStats {
  std::size_t samples_seen = 0;
  std::size_t samples_changed = 0;
  std::size_t protected_samples = 0;
  std::vector<std::size_t> per_class_flips;  // fine classes
};

// Model-based relabeling: every non-expert sample's fine labels are replaced
// by thresholded clip probabilities; expert samples pass through untouched.
// `predict` returns fine-class probabilities for a manifest entry.
using PredictFn =
    std::function<std::vector<double>(const ManifestEntry& entry)>;
DatasetManifest relabel_dataset(const PredictFn& predict,
                                const DatasetManifest& manifest,
                                const AnnotationSet& annotations,
                                const Taxonomy& taxonomy,
                                const RelabelConfig& cfg, RelabelStats* stats);

}  // namespace ust

#endif  // UST_RELABEL_H_
