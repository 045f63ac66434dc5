// ust/runner.cc

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

#include "ust/runner.h"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace ust {

namespace {

std::string dataset_name(const ExperimentConfig& cfg) {
  return fs::path(cfg.manifest_path).stem().string();
}

Taxonomy taxonomy_for(const DatasetManifest& manifest) {
  return Taxonomy::load(manifest.resolve(manifest.taxonomy_path));
}

void write_config_snapshot(const ExperimentConfig& cfg,
                           const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream f((fs::path(out_dir) / "config.ini").string(), std::ios::trunc);
  if (!f) throw DataError("cannot write config snapshot in " + out_dir);
  f << cfg.to_map().to_string();
}

MetricReport report_from_metrics(
    const std::string& dataset,
    const std::map<std::string, double>& mean,
    const std::map<std::string, double>& stddev,
    const std::string& ranking_key) {
  MetricReport rep;
  for (const auto& [key, value] : mean) {
    const auto dot = key.find('.');
    MetricRow row;
    row.dataset = dataset;
    row.granularity = key.substr(0, dot);
    row.metric = key.substr(dot + 1);
    row.mean = value;
    row.stddev = stddev.count(key) ? stddev.at(key) : 0.0;
    row.ranking = key == ranking_key;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

void save_metrics(const MetricReport& rep, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream f((fs::path(out_dir) / "metrics.tsv").string(), std::ios::trunc);
  if (!f) throw DataError("cannot write metrics.tsv in " + out_dir);
  f << rep.to_tsv();
}

}  // namespace

FeaturizeResult cmd_featurize(const ExperimentConfig& cfg, std::ostream& out,
                              int threads) {
  DatasetManifest manifest = DatasetManifest::load(cfg.manifest_path);
  FeatureCache cache(cfg.resolved_cache_dir());
  const FeaturizeSpec spec = cfg.featurize_spec();

  FeaturizeResult result;
  std::vector<std::string> failures(manifest.entries.size());
  std::vector<int> status(manifest.entries.size(), 0);  // 1 computed, 2 hit, 3 fail
  std::vector<std::uint64_t> bytes(manifest.entries.size(), 0);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= manifest.entries.size()) return;
      const auto& e = manifest.entries[i];
      try {
        bool computed = false;
        cache.get_or_compute(manifest.resolve(e.path), spec, &computed);
        status[i] = computed ? 1 : 2;
        const std::string path =
            cache.entry_path(FeatureCache::key_for(
                [&] {
                  std::ifstream f(manifest.resolve(e.path), std::ios::binary);
                  return std::vector<unsigned char>(
                      (std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
                }(),
                spec));
        bytes[i] = fs::exists(path) ? fs::file_size(path) : 0;
      } catch (const std::exception& ex) {
        status[i] = 3;
        failures[i] = ex.what();
      }
    }
  };
  const int n_threads = std::max(1, threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    switch (status[i]) {
      case 1:
        ++result.computed;
        result.total_bytes += bytes[i];
        break;
      case 2:
        ++result.cached;
        result.total_bytes += bytes[i];
        break;
      default:
        ++result.failed;
        out << "featurize: FAILED " << manifest.entries[i].sample_id << ": "
            << failures[i] << "\n";
    }
  }
  out << "featurize: " << result.computed << " computed, " << result.cached
      << " cache hits, " << result.failed << " failed, " << result.total_bytes
      << " bytes in " << cache.dir() << "\n";
  return result;
}

TrainResult cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
  DatasetManifest manifest = DatasetManifest::load(cfg.manifest_path);
  Taxonomy taxonomy = taxonomy_for(manifest);
  FeatureCache cache(cfg.resolved_cache_dir());
  write_config_snapshot(cfg, cfg.out_dir);

  DualBackboneModel model(cfg.model_config(taxonomy));
  if (!cfg.pretrained_global.empty()) {
    model.load_pretrained_global(cfg.pretrained_global);
    out << "loaded pretrained global extractor from " << cfg.pretrained_global
        << (model.global_frozen() ? " (frozen)\n" : "\n");
  }

  TrainResult result =
      train_model(&model, cfg, manifest, taxonomy, &cache, cfg.out_dir);

  for (const auto& log : result.history) {
    out << "epoch " << log.epoch << " step " << log.step << " loss "
        << std::setprecision(6) << log.train_loss;
    if (log.val_metrics.count(result.checkpoint_metric))
      out << " " << result.checkpoint_metric << " "
          << log.val_metrics.at(result.checkpoint_metric);
    out << "\n";
  }
  out << "best " << result.checkpoint_metric << " = " << result.best_value
      << " at step " << result.best_step << "\n";

  // per-metric maximum over epochs, the protocol's per-run headline numbers
  std::map<std::string, double> best;
  for (const auto& log : result.history)
    for (const auto& [k, v] : log.val_metrics) {
      auto it = best.find(k);
      if (it == best.end() || v > it->second) best[k] = v;
    }
  const std::string ranking =
      cfg.resolved_checkpoint_metric(taxonomy, manifest.task_mode);
  save_metrics(report_from_metrics(dataset_name(cfg), best, {}, ranking),
               cfg.out_dir);
  return result;
}

MetricReport cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
                      std::ostream& out) {
  DatasetManifest manifest = DatasetManifest::load(cfg.manifest_path);
  Taxonomy taxonomy = taxonomy_for(manifest);
  FeatureCache cache(cfg.resolved_cache_dir());
  const std::string ranking =
      cfg.resolved_checkpoint_metric(taxonomy, manifest.task_mode);

  MetricReport rep;
  if (checkpoint.empty()) {
    if (manifest.n_folds() < 2)
      throw ConfigError(
          "eval: provide --checkpoint, or a manifest with >= 2 predefined "
          "folds for cross-validation");
    out << "cross-validation over " << manifest.n_folds()
        << " predefined folds\n";
    auto summary = cross_validate(
        manifest, [&](const DatasetManifest& train_set,
                      const DatasetManifest& eval_set, int fold) {
          ExperimentConfig fold_cfg = cfg;
          fold_cfg.out_dir =
              (fs::path(cfg.out_dir) / ("fold" + std::to_string(fold)))
                  .string();
          // the held-out fold is this fold's validation set
          DatasetManifest merged = train_set;
          for (auto& e : merged.entries) e.split = "train";
          for (auto e : eval_set.entries) {
            e.split = "validate";
            merged.entries.push_back(std::move(e));
          }
          DualBackboneModel model(fold_cfg.model_config(taxonomy));
          if (!fold_cfg.pretrained_global.empty())
            model.load_pretrained_global(fold_cfg.pretrained_global);
          TrainResult tr = train_model(&model, fold_cfg, merged, taxonomy,
                                       &cache, fold_cfg.out_dir);
          FoldResult fr;
          fr.fold = fold;
          for (const auto& log : tr.history)
            for (const auto& [k, v] : log.val_metrics) {
              auto it = fr.best_value.find(k);
              if (it == fr.best_value.end() || v > it->second) {
                fr.best_value[k] = v;
                fr.best_step[k] = static_cast<int>(log.step);
              }
            }
          out << "fold " << fold << " done\n";
          return fr;
        });
    rep = report_from_metrics(dataset_name(cfg), summary.mean, summary.stddev,
                              ranking);
  } else {
    DualBackboneModel model(cfg.model_config(taxonomy));
    model.load(checkpoint);
    std::vector<std::size_t> val_idx;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
      if (manifest.entries[i].split == "validate") val_idx.push_back(i);
    if (val_idx.empty())
      for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        val_idx.push_back(i);
    PreparedSet set = prepare_set(manifest, val_idx, taxonomy, &cache,
                                  cfg.featurize_spec());
    auto probs = predict_set(&model, set, cfg.train.batch_size);
    auto metrics =
        evaluate_metrics(probs, set.targets, taxonomy, manifest.task_mode);
    rep = report_from_metrics(dataset_name(cfg), metrics, {}, ranking);
  }

  for (const auto& row : rep.rows) {
    out << row.dataset << " " << row.granularity << "." << row.metric << " = "
        << std::setprecision(6) << row.mean;
    if (row.stddev > 0) out << " +- " << row.stddev;
    if (row.ranking) out << " [ranking]";
    out << "\n";
  }
  save_metrics(rep, cfg.out_dir);
  return rep;
}

RelabelCommandResult cmd_relabel(const ExperimentConfig& cfg,
                                 const std::string& checkpoint,
                                 std::ostream& out) {
  DatasetManifest manifest = DatasetManifest::load(cfg.manifest_path);
  Taxonomy taxonomy = taxonomy_for(manifest);
  FeatureCache cache(cfg.resolved_cache_dir());

  const std::string ann_path =
      (fs::path(manifest.base_dir) / "annotations.tsv").string();
  AnnotationSet annotations;
  if (fs::exists(ann_path))
    annotations = AnnotationSet::load(ann_path, taxonomy.n_fine());

  DualBackboneModel model(cfg.model_config(taxonomy));
  model.load(checkpoint);

  // only the train split is relabeled; validation stays expert ground truth
  DatasetManifest train_part = manifest;
  train_part.entries.clear();
  for (const auto& e : manifest.entries)
    if (e.split == "train") train_part.entries.push_back(e);
  if (train_part.entries.empty())
    throw DataError("relabel: no non-validation samples present");

  const FeaturizeSpec spec = cfg.featurize_spec();
  const std::size_t n_coarse = taxonomy.n_coarse();
  auto predict = [&](const ManifestEntry& e) {
    LogMelSpectrogram s = cache.get_or_compute(manifest.resolve(e.path), spec);
    ClipPrediction pred = model.predict(s);
    // fine block sits after the coarse outputs
    return std::vector<double>(pred.clip_probs.begin() + n_coarse,
                               pred.clip_probs.end());
  };

  RelabelStats stats;
  DatasetManifest relabeled_train = relabel_dataset(
      predict, train_part, annotations, taxonomy, cfg.relabel, &stats);

  // stitch the relabeled train rows back into the full manifest order
  DatasetManifest result_manifest = manifest;
  std::size_t cursor = 0;
  for (auto& e : result_manifest.entries)
    if (e.split == "train") e = relabeled_train.entries[cursor++];

  const fs::path src(cfg.manifest_path);
  const std::string out_path =
      (src.parent_path() / (src.stem().string() + ".relabeled.tsv")).string();
  result_manifest.save(out_path);

  out << "relabel: " << stats.samples_changed << " of " << stats.samples_seen
      << " train samples changed, " << stats.protected_samples
      << " expert-protected\n";
  for (std::size_t c = 0; c < stats.per_class_flips.size(); ++c)
    if (stats.per_class_flips[c] > 0)
      out << "  class " << taxonomy.fine_names[c] << ": "
          << stats.per_class_flips[c] << " flips\n";
  out << "relabeled manifest: " << out_path << "\n";
  return {out_path, stats};
}

std::size_t cmd_report(const std::vector<std::string>& run_dirs,
                       std::ostream& out) {
  if (run_dirs.empty()) throw ConfigError("report: no run directories given");
  struct Column {
    std::string name;
    std::map<std::string, MetricRow> rows;  // key: granularity.metric
  };
  std::vector<Column> columns;
  std::size_t failures = 0;
  std::vector<std::string> row_order;
  for (const auto& dir : run_dirs) {
    const std::string path = (fs::path(dir) / "metrics.tsv").string();
    try {
      std::ifstream f(path);
      if (!f) throw DataError("missing metrics file: " + path);
      std::string text((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
      MetricReport rep = MetricReport::from_tsv(text);
      Column col;
      col.name = fs::path(dir).filename().string();
      for (const auto& row : rep.rows) {
        const std::string key = row.granularity + "." + row.metric;
        col.rows[key] = row;
        if (std::find(row_order.begin(), row_order.end(), key) ==
            row_order.end())
          row_order.push_back(key);
      }
      columns.push_back(std::move(col));
    } catch (const std::exception& e) {
      out << "report: skipping " << dir << ": " << e.what() << "\n";
      ++failures;
    }
  }
  if (columns.empty()) throw DataError("report: no readable run directories");

  out << std::left << std::setw(28) << "metric";
  for (const auto& col : columns) out << std::setw(22) << col.name;
  out << "\n";
  for (const auto& key : row_order) {
    bool ranking = false;
    for (const auto& col : columns) {
      auto it = col.rows.find(key);
      if (it != col.rows.end() && it->second.ranking) ranking = true;
    }
    out << std::left << std::setw(28) << (ranking ? "*" + key : key);
    for (const auto& col : columns) {
      auto it = col.rows.find(key);
      if (it == col.rows.end()) {
        out << std::setw(22) << "-";
        continue;
      }
      std::ostringstream cell;
      cell << std::setprecision(4) << it->second.mean;
      if (it->second.stddev > 0)
        cell << " +- " << std::setprecision(3) << it->second.stddev;
      out << std::setw(22) << cell.str();
    }
    out << "\n";
  }
  out << "* official ranking metric; spreads are mean +- population std over folds\n";
  return failures;
}

}  // namespace ust
