// ust/train.cc

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

#include "ust/train.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ust/relabel.h"

namespace fs = std::filesystem;

namespace ust {

namespace {

std::vector<double> targets_for(const ManifestEntry& e,
                                const Taxonomy& taxonomy) {
  std::vector<double> t;
  if (taxonomy.hierarchical()) {
    auto coarse = taxonomy.coarse_from_fine(e.fine_labels);
    for (int v : coarse) t.push_back(v);
  }
  for (int v : e.fine_labels) t.push_back(v);
  return t;
}

Tensor batch_tensor(const PreparedSet& set,
                    const std::vector<std::size_t>& batch,
                    const std::vector<LogMelSpectrogram>* augmented) {
  const std::size_t T = set.n_frames;
  std::vector<double> data(batch.size() * T * 64);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const LogMelSpectrogram& s =
        augmented ? (*augmented)[i] : set.features[batch[i]];
    std::copy(s.data.begin(), s.data.end(), data.begin() + i * T * 64);
  }
  return Tensor::from(std::move(data), {batch.size(), 1, T, 64});
}

}  // namespace

PreparedSet prepare_set(const DatasetManifest& manifest,
                        const std::vector<std::size_t>& indices,
                        const Taxonomy& taxonomy, FeatureCache* cache,
                        const FeaturizeSpec& spec) {
  PreparedSet set;
  set.n_outputs = taxonomy.n_coarse() + taxonomy.n_fine();
  for (std::size_t idx : indices) {
    const auto& e = manifest.entries[idx];
    LogMelSpectrogram s =
        cache ? cache->get_or_compute(manifest.resolve(e.path), spec)
              : compute_features(manifest.resolve(e.path), spec);
    if (s.n_mels != 64) throw DataError("prepare_set: expected 64 mel bins");
    // right-pad frames to a multiple of 4 with the log floor
    const std::size_t padded = (s.n_frames + 3) / 4 * 4;
    if (padded != s.n_frames) {
      s.data.resize(padded * s.n_mels, std::log(spec.spectrogram.log_floor));
      s.n_frames = padded;
    }
    if (set.n_frames == 0) set.n_frames = s.n_frames;
    if (s.n_frames != set.n_frames)
      throw DataError(
          "prepare_set: clips disagree on frame count; set "
          "dataset.target_samples to normalize lengths");
    set.features.push_back(std::move(s));
    set.targets.push_back(targets_for(e, taxonomy));
    set.entry_index.push_back(idx);
  }
  return set;
}

std::vector<std::vector<double>> predict_set(DualBackboneModel* model,
                                             const PreparedSet& set,
                                             std::size_t batch_size) {
  GradMode off(false);
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> order(set.features.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
    Tensor x = batch_tensor(set, batch, nullptr);
    auto y = model->forward(x, /*training=*/false);
    const std::size_t C = y.clip_probs.dim(1);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::vector<double> probs(C);
      for (std::size_t c = 0; c < C; ++c) probs[c] = y.clip_probs.at({i, c});
      out.push_back(std::move(probs));
    }
  }
  return out;
}

std::map<std::string, double> evaluate_metrics(
    const std::vector<std::vector<double>>& clip_probs,
    const std::vector<std::vector<double>>& targets, const Taxonomy& taxonomy,
    TaskMode mode) {
  if (clip_probs.size() != targets.size())
    throw DataError("evaluate_metrics: size mismatch");
  const std::size_t n = clip_probs.size();
  const std::size_t n_coarse = taxonomy.n_coarse();
  const std::size_t n_fine = taxonomy.n_fine();

  auto block_metrics = [&](const std::string& gran, std::size_t offset,
                           std::size_t width, TaskMode block_mode,
                           std::map<std::string, double>* out) {
    PredictionSet p;
    p.n_samples = n;
    p.n_classes = width;
    p.mode = block_mode;
    p.scores.resize(n * width);
    p.labels.resize(n * width);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < width; ++c) {
        p.scores[i * width + c] =
            std::clamp(clip_probs[i][offset + c], 0.0, 1.0);
        p.labels[i * width + c] = targets[i][offset + c] >= 0.5 ? 1 : 0;
      }
    (*out)[gran + ".auprc_macro"] = auprc_macro(p).value;
    (*out)[gran + ".auprc_micro"] = auprc_micro(p);
    (*out)[gran + ".f1_micro"] = f1_micro(p);
    (*out)[gran + ".map"] = mean_average_precision(p).value;
    (*out)[gran + ".map_11pt"] = map_11point(p);
    if (block_mode == TaskMode::kSingleLabel)
      (*out)[gran + ".accuracy"] = accuracy(p);
  };

  std::map<std::string, double> out;
  if (taxonomy.hierarchical()) {
    block_metrics("coarse", 0, n_coarse, TaskMode::kMultilabel, &out);
    block_metrics("fine", n_coarse, n_fine, TaskMode::kMultilabel, &out);
  } else {
    block_metrics("mono", 0, n_fine, mode, &out);
  }
  return out;
}

void write_train_log(const std::string& path,
                     const std::vector<EpochLog>& history) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("train log: cannot write " + path);
  f << "epoch\tstep\ttrain_loss";
  if (!history.empty())
    for (const auto& [k, v] : history.front().val_metrics) {
      (void)v;
      f << "\t" << k;
    }
  f << "\n";
  f.precision(17);
  for (const auto& log : history) {
    f << log.epoch << "\t" << log.step << "\t" << log.train_loss;
    for (const auto& [k, v] : log.val_metrics) {
      (void)k;
      f << "\t" << v;
    }
    f << "\n";
  }
}

TrainResult train_model(DualBackboneModel* model, const ExperimentConfig& cfg,
                        const DatasetManifest& manifest,
                        const Taxonomy& taxonomy, FeatureCache* cache,
                        const std::string& out_dir) {
  fs::create_directories(out_dir);
  const FeaturizeSpec fspec = cfg.featurize_spec();

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].split == "validate") val_idx.push_back(i);
    else train_idx.push_back(i);
  }
  if (train_idx.empty()) throw DataError("train: no training samples");

  PreparedSet train_set =
      prepare_set(manifest, train_idx, taxonomy, cache, fspec);
  PreparedSet val_set;
  if (!val_idx.empty())
    val_set = prepare_set(manifest, val_idx, taxonomy, cache, fspec);

  const std::string metric_key =
      cfg.resolved_checkpoint_metric(taxonomy, manifest.task_mode);

  TrainResult result;
  result.checkpoint_metric = metric_key;
  result.best_checkpoint = (fs::path(out_dir) / "best.ckpt").string();
  result.last_checkpoint = (fs::path(out_dir) / "last.ckpt").string();

  Optimizer optimizer(cfg.optimizer);
  Rng shuffle_rng(cfg.train.seed);
  std::vector<std::pair<int, double>> metric_history;
  std::size_t steps_taken = 0;
  bool step_cap_hit = false;

  if (cfg.train.epochs == 0) {
    // degenerate run: persist the initial weights only
    model->save(result.last_checkpoint);
    model->save(result.best_checkpoint);
    write_train_log((fs::path(out_dir) / "train_log.tsv").string(),
                    result.history);
    return result;
  }

  for (std::size_t epoch = 1; epoch <= cfg.train.epochs && !step_cap_hit;
       ++epoch) {
    // seeded Fisher-Yates; predefined folds/splits are never touched, only
    // the visit order within the training split changes
    std::vector<std::size_t> order(train_set.features.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.train.batch_size) {
      if (cfg.train.max_steps > 0 && steps_taken >= cfg.train.max_steps) {
        step_cap_hit = true;
        break;
      }
      const std::size_t end =
          std::min(order.size(), start + cfg.train.batch_size);
      std::vector<std::size_t> batch(order.begin() + start,
                                     order.begin() + end);

      std::vector<std::vector<double>> y_rows;
      Tensor x;
      if (cfg.train.augment) {
        std::vector<LogMelSpectrogram> augmented;
        for (std::size_t i = 0; i < batch.size(); ++i) {
          Rng stream = shuffle_rng.split(
              (static_cast<std::uint64_t>(epoch) << 32) ^ batch[i]);
          augmented.push_back(
              apply_policy(train_set.features[batch[i]], cfg.augment, &stream));
          y_rows.push_back(train_set.targets[batch[i]]);
        }
        if (cfg.augment.mixup_enabled && batch.size() > 1) {
          Rng mix_stream = shuffle_rng.split(
              (static_cast<std::uint64_t>(epoch) << 32) ^ 0xabcdefULL);
          std::vector<LogMelSpectrogram> mixed = augmented;
          for (std::size_t i = 0; i < batch.size(); ++i) {
            const std::size_t j = mix_stream.uniform_index(batch.size());
            auto r = mixup(augmented[i].data, y_rows[i], augmented[j].data,
                           y_rows[j], cfg.augment.mixup_alpha, &mix_stream);
            mixed[i].data = std::move(r.x);
            y_rows[i] = std::move(r.y);
          }
          augmented = std::move(mixed);
        }
        x = batch_tensor(train_set, batch, &augmented);
      } else {
        for (std::size_t i : batch) y_rows.push_back(train_set.targets[i]);
        x = batch_tensor(train_set, batch, nullptr);
      }

      std::vector<double> y_flat;
      for (const auto& row : y_rows)
        y_flat.insert(y_flat.end(), row.begin(), row.end());
      Tensor y = Tensor::from(std::move(y_flat),
                              {batch.size(), train_set.n_outputs});

      model->zero_grad();
      Tensor loss;
      try {
        auto out = model->forward(x, /*training=*/batch.size() > 1);
        loss = nn::bce_loss(out.clip_probs, y);
        loss.backward();
        optimizer.step(&model->parameters());
      } catch (const NumericError& e) {
        throw NumericError("training aborted at step " +
                           std::to_string(steps_taken + 1) + ": " + e.what());
      }
      loss_sum += loss.item();
      ++loss_count;
      ++steps_taken;
    }

    EpochLog log;
    log.epoch = epoch;
    log.step = steps_taken;
    log.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    if (!val_set.features.empty()) {
      auto probs = predict_set(model, val_set, cfg.train.batch_size);
      log.val_metrics = evaluate_metrics(probs, val_set.targets, taxonomy,
                                         manifest.task_mode);
      if (log.val_metrics.count(metric_key)) {
        metric_history.push_back({static_cast<int>(steps_taken),
                                  log.val_metrics.at(metric_key)});
        const int best_step = select_best_checkpoint(metric_history);
        if (best_step == static_cast<int>(steps_taken)) {
          model->save(result.best_checkpoint);
          result.best_step = steps_taken;
          result.best_value = log.val_metrics.at(metric_key);
        }
      }
    }
    result.history.push_back(std::move(log));
  }

  model->save(result.last_checkpoint);
  if (metric_history.empty()) model->save(result.best_checkpoint);
  write_train_log((fs::path(out_dir) / "train_log.tsv").string(),
                  result.history);
  return result;
}

}  // namespace ust
