// ust/train.h

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

#ifndef UST_TRAIN_H_
#define UST_TRAIN_H_

#include <map>
#include <string>
#include <vector>

#include "ust/config.h"
#include "ust/data.h"
#include "ust/model.h"

namespace ust {

// Cached, normalized spectrograms plus multi-hot targets ([coarse..., fine...])
// for a list of manifest entries. All clips in one set share a frame count.
struct PreparedSet {
  std::vector<LogMelSpectrogram> features;
  std::vector<std::vector<double>> targets;
  std::vector<std::size_t> entry_index;  // back-reference into the manifest
  std::size_t n_frames = 0;              // padded to a multiple of 4
  std::size_t n_outputs = 0;
};

PreparedSet prepare_set(const DatasetManifest& manifest,
                        const std::vector<std::size_t>& indices,
                        const Taxonomy& taxonomy, FeatureCache* cache,
                        const FeaturizeSpec& spec);

// Clip probabilities for every prepared sample, eval mode, batched.
std::vector<std::vector<double>> predict_set(DualBackboneModel* model,
                                             const PreparedSet& set,
                                             std::size_t batch_size);

// Metric table per granularity, keys "<granularity>.<metric>".
std::map<std::string, double> evaluate_metrics(
    const std::vector<std::vector<double>>& clip_probs,
    const std::vector<std::vector<double>>& targets, const Taxonomy& taxonomy,
    TaskMode mode);

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t step = 0;  // optimizer steps taken so far
  double train_loss = 0.0;
  std::map<std::string, double> val_metrics;
};

struct TrainResult {
  std::vector<EpochLog> history;
  std::string best_checkpoint;
  std::string last_checkpoint;
  std::size_t best_step = 0;
  double best_value = 0.0;
  std::string checkpoint_metric;
};

// Deterministic training loop: seeded shuffling, per-sample augmentation
// streams, one optimizer step per batch. Saves best (by the resolved
// checkpoint metric) and last checkpoints under out_dir and writes
// train_log.tsv.
TrainResult train_model(DualBackboneModel* model, const ExperimentConfig& cfg,
                        const DatasetManifest& manifest,
                        const Taxonomy& taxonomy, FeatureCache* cache,
                        const std::string& out_dir);

void write_train_log(const std::string& path,
                     const std::vector<EpochLog>& history);

}  // namespace ust

#endif  // UST_TRAIN_H_
