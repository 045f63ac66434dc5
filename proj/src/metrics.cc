// ust/metrics.cc

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

#include "ust/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ust {

void PredictionSet::validate() const {
  if (scores.size() != n_samples * n_classes ||
      labels.size() != n_samples * n_classes)
    throw DataError("PredictionSet: shape mismatch");
  for (double s : scores)
    if (!(s >= 0.0 && s <= 1.0))
      throw DataError("PredictionSet: score outside [0,1]");
  for (int l : labels)
    if (l != 0 && l != 1) throw DataError("PredictionSet: label not in {0,1}");
  if (mode == TaskMode::kSingleLabel) {
    for (std::size_t s = 0; s < n_samples; ++s) {
      int row = 0;
      for (std::size_t c = 0; c < n_classes; ++c) row += label(s, c);
      if (row != 1)
        throw DataError("PredictionSet: single-label rows must sum to 1");
    }
  }
}

PRCurve pr_curve(const std::vector<double>& scores,
                 const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DataError("pr_curve: size mismatch");
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (int l : labels) positives += static_cast<std::size_t>(l);
  if (positives == 0) throw DataError("pr_curve: no positive labels");

  // sort indices by score descending; ties share one threshold
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  PRCurve curve;
  curve.points.push_back({0.0, 1.0});  // anchor
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    const double thr = scores[order[i]];
    // consume the whole tie group
    while (i < n && scores[order[i]] == thr) {
      if (labels[order[i]]) ++tp; else ++fp;
      ++i;
    }
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    curve.points.push_back({recall, precision});
  }
  return curve;
}

double average_precision(const PRCurve& curve) {
  double ap = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const double dr = curve.points[i].recall - curve.points[i - 1].recall;
    ap += dr * curve.points[i].precision;
  }
  return ap;
}

namespace {

// Per-class slices of a PredictionSet, skipping positive-free classes.
struct ClassSlices {
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<int>> labels;
  std::size_t skipped = 0;
};

ClassSlices per_class(const PredictionSet& p) {
  p.validate();
  ClassSlices out;
  for (std::size_t c = 0; c < p.n_classes; ++c) {
    std::vector<double> s(p.n_samples);
    std::vector<int> l(p.n_samples);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < p.n_samples; ++i) {
      s[i] = p.score(i, c);
      l[i] = p.label(i, c);
      positives += static_cast<std::size_t>(l[i]);
    }
    if (positives == 0) {
      ++out.skipped;
      continue;
    }
    out.scores.push_back(std::move(s));
    out.labels.push_back(std::move(l));
  }
  return out;
}

}  // namespace

MacroResult auprc_macro(const PredictionSet& p) {
  ClassSlices slices = per_class(p);
  MacroResult r;
  r.classes_skipped = slices.skipped;
  r.classes_used = slices.scores.size();
  if (r.classes_used == 0) return r;
  double acc = 0.0;
  for (std::size_t c = 0; c < slices.scores.size(); ++c)
    acc += average_precision(pr_curve(slices.scores[c], slices.labels[c]));
  r.value = acc / static_cast<double>(r.classes_used);
  return r;
}

double auprc_micro(const PredictionSet& p) {
  p.validate();
  std::size_t positives = 0;
  for (int l : p.labels) positives += static_cast<std::size_t>(l);
  if (positives == 0) throw DataError("auprc_micro: no positives anywhere");
  return average_precision(pr_curve(p.scores, p.labels));
}

double map_11point(const PredictionSet& p) {
  ClassSlices slices = per_class(p);
  if (slices.scores.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < slices.scores.size(); ++c) {
    PRCurve curve = pr_curve(slices.scores[c], slices.labels[c]);
    double class_sum = 0.0;
    for (int level = 0; level <= 10; ++level) {
      const double r = static_cast<double>(level) / 10.0;
      double best = 0.0;
      for (std::size_t i = 1; i < curve.points.size(); ++i)
        if (curve.points[i].recall >= r - 1e-12)
          best = std::max(best, curve.points[i].precision);
      class_sum += best;
    }
    total += class_sum / 11.0;
  }
  return total / static_cast<double>(slices.scores.size());
}

MacroResult mean_average_precision(const PredictionSet& p) {
  // Independent route: walks the descending-sorted scores and accumulates
  // precision at each recall step directly.
  ClassSlices slices = per_class(p);
  MacroResult r;
  r.classes_skipped = slices.skipped;
  r.classes_used = slices.scores.size();
  if (r.classes_used == 0) return r;
  double total = 0.0;
  for (std::size_t c = 0; c < slices.scores.size(); ++c) {
    const auto& s = slices.scores[c];
    const auto& l = slices.labels[c];
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    std::size_t positives = 0;
    for (int v : l) positives += static_cast<std::size_t>(v);
    double ap = 0.0;
    std::size_t tp = 0, seen = 0, i = 0;
    std::size_t prev_tp = 0;
    while (i < order.size()) {
      const double thr = s[order[i]];
      while (i < order.size() && s[order[i]] == thr) {
        tp += static_cast<std::size_t>(l[order[i]]);
        ++seen;
        ++i;
      }
      const double precision = static_cast<double>(tp) / static_cast<double>(seen);
      ap += precision * static_cast<double>(tp - prev_tp) /
            static_cast<double>(positives);
      prev_tp = tp;
    }
    total += ap;
  }
  r.value = total / static_cast<double>(r.classes_used);
  return r;
}

double f1_micro(const PredictionSet& p, double threshold) {
  p.validate();
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < p.scores.size(); ++i) {
    const bool pred = p.scores[i] >= threshold;
    const bool truth = p.labels[i] == 1;
    if (pred && truth) ++tp;
    else if (pred && !truth) ++fp;
    else if (!pred && truth) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  if (denom == 0.0) return 0.0;
  return 2.0 * static_cast<double>(tp) / denom;
}

double accuracy(const PredictionSet& p) {
  p.validate();
  if (p.mode != TaskMode::kSingleLabel)
    throw DataError("accuracy: defined for single-label mode only");
  std::size_t hits = 0;
  for (std::size_t s = 0; s < p.n_samples; ++s) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < p.n_classes; ++c)
      if (p.score(s, c) > p.score(s, best)) best = c;  // ties keep lowest index
    std::size_t truth = 0;
    for (std::size_t c = 0; c < p.n_classes; ++c)
      if (p.label(s, c) == 1) {
        truth = c;
        break;
      }
    if (best == truth) ++hits;
  }
  return p.n_samples == 0
             ? 0.0
             : static_cast<double>(hits) / static_cast<double>(p.n_samples);
}

std::string MetricReport::to_tsv() const {
  std::ostringstream os;
  os << "dataset\tgranularity\tmetric\tmean\tstd\tranking\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.dataset << "\t" << r.granularity << "\t" << r.metric << "\t"
       << r.mean << "\t" << r.stddev << "\t" << (r.ranking ? 1 : 0) << "\n";
  }
  return os.str();
}

MetricReport MetricReport::from_tsv(const std::string& text) {
  MetricReport rep;
  std::istringstream is(text);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream ls(line);
    MetricRow row;
    std::string mean_s, std_s, rank_s;
    if (!std::getline(ls, row.dataset, '\t') ||
        !std::getline(ls, row.granularity, '\t') ||
        !std::getline(ls, row.metric, '\t') || !std::getline(ls, mean_s, '\t') ||
        !std::getline(ls, std_s, '\t') || !std::getline(ls, rank_s, '\t'))
      throw DataError("MetricReport: malformed row: " + line);
    row.mean = std::stod(mean_s);
    row.stddev = std::stod(std_s);
    row.ranking = rank_s == "1";
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace ust
