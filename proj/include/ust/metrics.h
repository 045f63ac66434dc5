// ust/metrics.h

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

#ifndef UST_METRICS_H_
#define UST_METRICS_H_

#include <string>
#include <vector>

#include "ust/common.h"

namespace ust {

enum class TaskMode { kMultilabel, kSingleLabel };

struct PredictionSet {
  std::size_t n_samples = 0;
  std::size_t n_classes = 0;
  std::vector<double> scores;  // row-major samples x classes, in [0,1]
  std::vector<int> labels;     // same layout, {0,1}
  TaskMode mode = TaskMode::kMultilabel;

  double score(std::size_t s, std::size_t c) const {
    return scores[s * n_classes + c];
  }
  int label(std::size_t s, std::size_t c) const {
    return labels[s * n_classes + c];
  }
  void validate() const;
};

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

// Operating points at every unique score threshold (descending), preceded by
// the (recall 0, precision 1) anchor. Recall is nondecreasing and ends at 1.
struct PRCurve {
  std::vector<PRPoint> points;
};

// Throws DataError when the class has no positive labels.
PRCurve pr_curve(const std::vector<double>& scores,
                 const std::vector<int>& labels);

// Step-sum over unique operating points: sum (R_n - R_{n-1}) * P_n.
double average_precision(const PRCurve& curve);

// Rounding threshold from the evaluation protocol: scores >= 0.5 round up.
inline constexpr double kDecisionThreshold = 0.5;

struct MacroResult {
  double value = 0.0;
  std::size_t classes_used = 0;
  std::size_t classes_skipped = 0;  // no positives
};

// Unweighted mean of per-class AP; classes without positives are skipped and
// counted.
MacroResult auprc_macro(const PredictionSet& p);

// AP over the flattened score/label arrays (one binary problem).
double auprc_micro(const PredictionSet& p);

// Historic 11-point interpolated mAP: mean over recall levels {0, .1, .., 1}
// of max precision at recall >= level. Exists to exhibit its divergence from
// the step-sum definition; never used for ranking.
double map_11point(const PredictionSet& p);

// Step-sum mAP computed per class directly from the sorted scores, without
// materializing PRCurve. A second route kept deliberately separate from
// auprc_macro so the two can be diffed.
MacroResult mean_average_precision(const PredictionSet& p);

// Globally pooled F1 after thresholding at >= 0.5; 0 when P + R == 0.
double f1_micro(const PredictionSet& p, double threshold = kDecisionThreshold);

// Single-label argmax accuracy; ties break toward the lowest class index.
double accuracy(const PredictionSet& p);

struct MetricRow {
  std::string dataset;
  std::string granularity;  // coarse | fine | mono
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;  // population
  bool ranking = false;
};

struct MetricReport {
  std::vector<MetricRow> rows;

  std::string to_tsv() const;
  static MetricReport from_tsv(const std::string& text);
};

}  // namespace ust

#endif  // UST_METRICS_H_
