// ust/data.h

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

#ifndef UST_DATA_H_
#define UST_DATA_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ust/dsp.h"
#include "ust/metrics.h"
#include "ust/taxonomy.h"

namespace ust {

struct ManifestEntry {
  std::string sample_id;
  std::string path;  // audio file, relative to the manifest directory
  int fold = 0;
  std::string split;  // "train" | "validate"
  std::vector<int> fine_labels;  // multi-hot over taxonomy fine classes
};

// Delimited-text dataset listing. Predefined folds are data, never
// reshuffled by the harness.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::string taxonomy_path;  // relative to the manifest directory
  TaskMode task_mode = TaskMode::kMultilabel;
  std::string base_dir;  // directory the manifest was loaded from

  std::size_t n_folds() const;
  std::string resolve(const std::string& rel) const;
  void validate(const Taxonomy& taxonomy) const;

  void save(const std::string& path) const;
  static DatasetManifest load(const std::string& path);
};

// Audio -> spectrogram normalization: mono, resample to the config rate,
// then pad or trim to target_samples (0 keeps the natural length).
struct FeaturizeSpec {
  SpectrogramConfig spectrogram;
  std::size_t target_samples = 0;

  std::string fingerprint() const;
};

LogMelSpectrogram compute_features(const std::string& audio_path,
                                   const FeaturizeSpec& spec);

// On-disk spectrogram cache. Payload format (little-endian):
//   "LMSP" | version u8 | frames u32 | mels u32 | config hash 16 bytes |
//   float32 data row-major | fnv1a-64 checksum of everything before it
// Payloads are float32; get_or_compute returns the quantized values so a
// cache hit is bit-identical to a fresh computation.
class FeatureCache {
 public:
  explicit FeatureCache(std::string dir);

  static std::string key_for(const std::vector<unsigned char>& audio_bytes,
                             const FeaturizeSpec& spec);
  std::string entry_path(const std::string& key) const;

  // computed_out, when set, reports whether a fresh DSP run happened.
  LogMelSpectrogram get_or_compute(const std::string& audio_path,
                                   const FeaturizeSpec& spec,
                                   bool* computed_out = nullptr);

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
};

void write_cache_entry(const std::string& path, const LogMelSpectrogram& s,
                       const FeaturizeSpec& spec);
// Throws DataError on checksum or header mismatch.
LogMelSpectrogram read_cache_entry(const std::string& path,
                                   const FeaturizeSpec& spec);

// ---- cross-validation -------------------------------------------------------

struct FoldResult {
  int fold = 0;
  // per metric: best value over training epochs and the step it occurred at
  std::map<std::string, double> best_value;
  std::map<std::string, int> best_step;
};

struct CrossValidationSummary {
  std::vector<FoldResult> folds;
  std::map<std::string, double> mean;
  std::map<std::string, double> stddev;  // population
};

// Trains via the supplied callback on every fold complement and evaluates on
// the held-out fold. The callback returns the per-metric maxima over its
// training epochs.
using FoldRunFn = std::function<FoldResult(const DatasetManifest& train_set,
                                           const DatasetManifest& eval_set,
                                           int fold)>;
CrossValidationSummary cross_validate(const DatasetManifest& manifest,
                                      const FoldRunFn& run_fold);

// ---- synthetic data ---------------------------------------------------------

struct SyntheticSpec {
  std::size_t n_samples = 32;
  std::size_t n_classes = 8;  // fine classes
  double clip_seconds = 1.0;
  int sample_rate = 44100;
  std::uint64_t seed = 1;
  bool hierarchical = false;   // pair fine classes under coarse parents
  double annotator_flip_prob = 0.0;  // 3 noisy annotators when > 0
  double expert_fraction = 0.0;      // leading fraction tagged as expert
  int n_folds = 1;
  double validate_fraction = 0.25;
};

// Each class is a distinct tone signature; clips superpose 1-3 classes.
// Writes WAVs, taxonomy.tsv, manifest.tsv and annotations.tsv under out_dir
// and returns the loaded manifest. Deterministic per seed.
DatasetManifest generate_synthetic_dataset(const std::string& out_dir,
                                           const SyntheticSpec& spec);

// Tone frequency used for synthetic class c of n.
double synthetic_tone_hz(std::size_t c, std::size_t n);

}  // namespace ust

#endif  // UST_DATA_H_
