// ust/runner.h

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

#ifndef UST_RUNNER_H_
#define UST_RUNNER_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "ust/config.h"
#include "ust/train.h"

namespace ust {

// Command implementations behind the CLI. They print human-readable progress
// to `out` and throw Config/Data/NumericError for the distinct exit codes.

struct FeaturizeResult {
  std::size_t computed = 0;
  std::size_t cached = 0;
  std::size_t failed = 0;
  std::uint64_t total_bytes = 0;
};

// Populates the feature cache for every manifest entry. Unreadable files are
// reported per file and skipped; failed > 0 signals partial failure.
FeaturizeResult cmd_featurize(const ExperimentConfig& cfg, std::ostream& out,
                              int threads = 1);

// Trains on the manifest's train split, evaluating on the validate split
// each epoch; persists best/last checkpoints, the resolved config snapshot,
// the training log and a metric report under cfg.out_dir.
TrainResult cmd_train(const ExperimentConfig& cfg, std::ostream& out);

// With a checkpoint: fixed-model evaluation on the validate split. Without
// one, a manifest with >= 2 predefined folds runs the full cross-validation
// protocol (train per fold, per-metric best over epochs, mean +- population
// std).
MetricReport cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
                      std::ostream& out);

struct RelabelCommandResult {
  std::string manifest_path;
  RelabelStats stats;
};

// Model-based relabeling of the train split; expert samples and the validate
// split pass through untouched. Writes <manifest>.relabeled.tsv next to the
// source manifest.
RelabelCommandResult cmd_relabel(const ExperimentConfig& cfg,
                                 const std::string& checkpoint,
                                 std::ostream& out);

// Side-by-side metric table over completed run directories; the ranking
// metric row is flagged. Returns the number of unreadable run directories.
std::size_t cmd_report(const std::vector<std::string>& run_dirs,
                       std::ostream& out);

}  // namespace ust

#endif  // UST_RUNNER_H_
