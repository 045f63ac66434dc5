// tools/ust_main.cc

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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ust/runner.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  long long seed = -1;

  ust::ExperimentConfig load() const {
    std::vector<std::string> all = overrides;
    if (!out_dir.empty()) all.push_back("output.dir=" + out_dir);
    if (seed >= 0) all.push_back("train.seed=" + std::to_string(seed));
    return ust::ExperimentConfig::load(config_path, all);
  }
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "experiment config file")
      ->required();
  cmd->add_option("--override", args->overrides,
                  "section.key=value (repeatable)");
  cmd->add_option("--out", args->out_dir, "output directory override");
  cmd->add_option("--seed", args->seed, "seed override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"urban sound tagging pipeline"};
  app.require_subcommand(1);

  CommonArgs feat_args;
  int feat_threads = 1;
  auto* feat = app.add_subcommand("featurize", "populate the spectrogram cache");
  add_common(feat, &feat_args);
  feat->add_option("--threads", feat_threads, "parallel workers");

  CommonArgs train_args;
  auto* train = app.add_subcommand("train", "train the dual-backbone model");
  add_common(train, &train_args);

  CommonArgs eval_args;
  std::string eval_checkpoint;
  auto* eval = app.add_subcommand(
      "eval", "evaluate a checkpoint or run fold cross-validation");
  add_common(eval, &eval_args);
  eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint path");

  CommonArgs relabel_args;
  std::string relabel_checkpoint;
  auto* relabel =
      app.add_subcommand("relabel", "model-based relabeling of the train split");
  add_common(relabel, &relabel_args);
  relabel->add_option("--checkpoint", relabel_checkpoint, "model checkpoint")
      ->required();

  std::vector<std::string> report_dirs;
  auto* report = app.add_subcommand("report", "compare completed runs");
  report->add_option("runs", report_dirs, "run directories")->required();

  ust::SyntheticSpec synth_spec;
  std::string synth_out;
  auto* synth = app.add_subcommand(
      "synth", "generate a desk-scale synthetic tone dataset");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--samples", synth_spec.n_samples, "clip count");
  synth->add_option("--classes", synth_spec.n_classes, "fine class count");
  synth->add_option("--seconds", synth_spec.clip_seconds, "clip length");
  synth->add_option("--seed", synth_spec.seed, "generator seed");
  synth->add_flag("--hierarchical", synth_spec.hierarchical,
                  "pair fine classes under coarse parents");
  synth->add_option("--flip-prob", synth_spec.annotator_flip_prob,
                    "per-vote flip probability for 3 noisy annotators");
  synth->add_option("--expert-fraction", synth_spec.expert_fraction,
                    "leading fraction of clips tagged as expert-annotated");
  synth->add_option("--folds", synth_spec.n_folds, "predefined fold count");
  synth->add_option("--validate-fraction", synth_spec.validate_fraction,
                    "trailing fraction tagged as the validate split");

  CLI11_PARSE(app, argc, argv);

  try {
    if (feat->parsed()) {
      auto result = ust::cmd_featurize(feat_args.load(), std::cout, feat_threads);
      return result.failed == 0 ? kExitOk : kExitData;
    }
    if (train->parsed()) {
      ust::cmd_train(train_args.load(), std::cout);
      return kExitOk;
    }
    if (eval->parsed()) {
      ust::cmd_eval(eval_args.load(), eval_checkpoint, std::cout);
      return kExitOk;
    }
    if (relabel->parsed()) {
      ust::cmd_relabel(relabel_args.load(), relabel_checkpoint, std::cout);
      return kExitOk;
    }
    if (report->parsed()) {
      return ust::cmd_report(report_dirs, std::cout) == 0 ? kExitOk : kExitData;
    }
    if (synth->parsed()) {
      auto manifest = ust::generate_synthetic_dataset(synth_out, synth_spec);
      std::cout << "wrote " << manifest.entries.size() << " clips under "
                << synth_out << "\n";
      return kExitOk;
    }
  } catch (const ust::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ust::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ust::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
