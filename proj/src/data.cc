// ust/data.cc

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

#include "ust/data.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "ust/wav_io.h"

namespace fs = std::filesystem;

namespace ust {

namespace {

std::string join_labels(const std::vector<int>& multi_hot) {
  std::ostringstream os;
  bool first = true;
  for (std::size_t c = 0; c < multi_hot.size(); ++c) {
    if (!multi_hot[c]) continue;
    if (!first) os << ";";
    os << c;
    first = false;
  }
  return os.str();
}

std::vector<int> parse_labels(const std::string& field, std::size_t n_classes) {
  std::vector<int> out(n_classes, 0);
  if (field.empty()) return out;
  std::istringstream is(field);
  std::string tok;
  while (std::getline(is, tok, ';')) {
    const auto c = static_cast<std::size_t>(std::stoul(tok));
    if (c >= n_classes)
      throw DataError("manifest: class id " + tok + " out of range");
    out[c] = 1;
  }
  return out;
}

std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  return std::vector<unsigned char>((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
}

}  // namespace

std::size_t DatasetManifest::n_folds() const {
  int max_fold = -1;
  for (const auto& e : entries) max_fold = std::max(max_fold, e.fold);
  return static_cast<std::size_t>(max_fold + 1);
}

std::string DatasetManifest::resolve(const std::string& rel) const {
  if (rel.empty()) return rel;
  fs::path p(rel);
  if (p.is_absolute() || base_dir.empty()) return rel;
  return (fs::path(base_dir) / p).string();
}

void DatasetManifest::validate(const Taxonomy& taxonomy) const {
  std::set<std::string> ids;
  std::set<int> folds;
  for (const auto& e : entries) {
    if (!ids.insert(e.sample_id).second)
      throw DataError("manifest: duplicate sample_id " + e.sample_id);
    if (e.fold < 0) throw DataError("manifest: negative fold");
    folds.insert(e.fold);
    if (e.split != "train" && e.split != "validate")
      throw DataError("manifest: split must be train|validate: " + e.split);
    if (e.fine_labels.size() != taxonomy.n_fine())
      throw DataError("manifest: label width mismatch for " + e.sample_id);
  }
  // folds must be contiguous from 0
  int expect = 0;
  for (int f : folds)
    if (f != expect++)
      throw DataError("manifest: fold indices must be contiguous from 0");
}

void DatasetManifest::save(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("manifest: cannot write " + path);
  f << "# taxonomy=" << taxonomy_path << "\ttask_mode="
    << (task_mode == TaskMode::kMultilabel ? "multilabel" : "single_label")
    << "\n";
  f << "sample_id\tpath\tfold\tsplit\tlabels\n";
  for (const auto& e : entries) {
    f << e.sample_id << "\t" << e.path << "\t" << e.fold << "\t" << e.split
      << "\t" << join_labels(e.fine_labels) << "\n";
  }
}

DatasetManifest DatasetManifest::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("manifest: cannot open " + path);
  DatasetManifest m;
  m.base_dir = fs::path(path).parent_path().string();

  std::string line;
  if (!std::getline(f, line) || line.rfind("# taxonomy=", 0) != 0)
    throw DataError("manifest: missing taxonomy header in " + path);
  {
    std::istringstream hs(line.substr(2));
    std::string tax_field, mode_field;
    std::getline(hs, tax_field, '\t');
    std::getline(hs, mode_field, '\t');
    m.taxonomy_path = tax_field.substr(std::string("taxonomy=").size());
    const std::string mode = mode_field.substr(std::string("task_mode=").size());
    if (mode == "multilabel") m.task_mode = TaskMode::kMultilabel;
    else if (mode == "single_label") m.task_mode = TaskMode::kSingleLabel;
    else throw DataError("manifest: unknown task_mode " + mode);
  }
  if (!std::getline(f, line) || line.rfind("sample_id", 0) != 0)
    throw DataError("manifest: missing column header in " + path);

  const Taxonomy taxonomy = Taxonomy::load(m.resolve(m.taxonomy_path));
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string fold_s, labels_s;
    if (!std::getline(ls, e.sample_id, '\t') || !std::getline(ls, e.path, '\t') ||
        !std::getline(ls, fold_s, '\t') || !std::getline(ls, e.split, '\t'))
      throw DataError("manifest: malformed row: " + line);
    std::getline(ls, labels_s, '\t');  // may be empty
    e.fold = std::stoi(fold_s);
    e.fine_labels = parse_labels(labels_s, taxonomy.n_fine());
    m.entries.push_back(std::move(e));
  }
  m.validate(taxonomy);
  return m;
}

std::string FeaturizeSpec::fingerprint() const {
  return spectrogram.fingerprint() + ";pad=" + std::to_string(target_samples);
}

LogMelSpectrogram compute_features(const std::string& audio_path,
                                   const FeaturizeSpec& spec) {
  Waveform w = read_wav(audio_path);
  w = to_mono(w);
  if (w.sample_rate != spec.spectrogram.target_sample_rate)
    w = resample(w, spec.spectrogram.target_sample_rate);
  if (spec.target_samples > 0) w = pad_or_trim(w, spec.target_samples);
  LogMelSpectrogram s = log_mel(w, spec.spectrogram);
  s.source_id = audio_path;
  return s;
}

// ---- cache ------------------------------------------------------------------

namespace {

constexpr char kCacheMagic[4] = {'L', 'M', 'S', 'P'};
constexpr unsigned char kCacheVersion = 1;

// 16-byte config hash: fnv1a-64 under two bases.
void config_hash(const FeaturizeSpec& spec, unsigned char out[16]) {
  const std::string fp = spec.fingerprint();
  const std::uint64_t a = fnv1a64_str(fp);
  const std::uint64_t b = fnv1a64_str(fp, 0x9e3779b97f4a7c15ULL);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(a >> (8 * i));
  for (int i = 0; i < 8; ++i)
    out[8 + i] = static_cast<unsigned char>(b >> (8 * i));
}

float quantize_f32(double v) { return static_cast<float>(v); }

}  // namespace

void write_cache_entry(const std::string& path, const LogMelSpectrogram& s,
                       const FeaturizeSpec& spec) {
  std::vector<unsigned char> buf;
  buf.insert(buf.end(), kCacheMagic, kCacheMagic + 4);
  buf.push_back(kCacheVersion);
  append_le<std::uint32_t>(&buf, static_cast<std::uint32_t>(s.n_frames));
  append_le<std::uint32_t>(&buf, static_cast<std::uint32_t>(s.n_mels));
  unsigned char ch[16];
  config_hash(spec, ch);
  buf.insert(buf.end(), ch, ch + 16);
  for (double v : s.data) {
    const float f = quantize_f32(v);
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(f));
    std::memcpy(&bits, &f, sizeof(bits));
    append_le<std::uint32_t>(&buf, bits);
  }
  append_le<std::uint64_t>(&buf, fnv1a64(buf.data(), buf.size()));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cache: cannot write " + path);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  }
  fs::rename(tmp, path);
}

LogMelSpectrogram read_cache_entry(const std::string& path,
                                   const FeaturizeSpec& spec) {
  auto buf = read_file_bytes(path);
  if (buf.size() < 4 + 1 + 8 + 16 + 8 ||
      std::memcmp(buf.data(), kCacheMagic, 4) != 0 || buf[4] != kCacheVersion)
    throw DataError("cache: bad header in " + path);
  const std::uint64_t stored_sum =
      read_le<std::uint64_t>(buf.data() + buf.size() - 8);
  const std::uint64_t computed_sum = fnv1a64(buf.data(), buf.size() - 8);
  if (stored_sum != computed_sum)
    throw DataError("cache: checksum mismatch in " + path);

  const auto frames = read_le<std::uint32_t>(buf.data() + 5);
  const auto mels = read_le<std::uint32_t>(buf.data() + 9);
  unsigned char expect_hash[16];
  config_hash(spec, expect_hash);
  if (std::memcmp(buf.data() + 13, expect_hash, 16) != 0)
    throw DataError("cache: config hash mismatch in " + path);

  const std::size_t payload = static_cast<std::size_t>(frames) * mels;
  if (buf.size() != 4 + 1 + 8 + 16 + payload * 4 + 8)
    throw DataError("cache: truncated payload in " + path);

  LogMelSpectrogram s;
  s.n_frames = frames;
  s.n_mels = mels;
  s.config = spec.spectrogram;
  s.data.resize(payload);
  const unsigned char* p = buf.data() + 29;
  for (std::size_t i = 0; i < payload; ++i) {
    const std::uint32_t bits = read_le<std::uint32_t>(p + i * 4);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    s.data[i] = static_cast<double>(f);
  }
  return s;
}

FeatureCache::FeatureCache(std::string dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::string FeatureCache::key_for(const std::vector<unsigned char>& audio_bytes,
                                  const FeaturizeSpec& spec) {
  const std::string fp = spec.fingerprint();
  std::uint64_t a = fnv1a64(audio_bytes.data(), audio_bytes.size());
  a = fnv1a64_str(fp, a);
  std::uint64_t b =
      fnv1a64(audio_bytes.data(), audio_bytes.size(), 0x9e3779b97f4a7c15ULL);
  b = fnv1a64_str(fp, b);
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << a;
  os.width(16);
  os << b;
  return os.str();
}

std::string FeatureCache::entry_path(const std::string& key) const {
  return (fs::path(dir_) / (key + ".lmsp")).string();
}

LogMelSpectrogram FeatureCache::get_or_compute(const std::string& audio_path,
                                               const FeaturizeSpec& spec,
                                               bool* computed_out) {
  const auto bytes = read_file_bytes(audio_path);
  const std::string path = entry_path(key_for(bytes, spec));
  if (fs::exists(path)) {
    try {
      LogMelSpectrogram s = read_cache_entry(path, spec);
      s.source_id = audio_path;
      if (computed_out) *computed_out = false;
      return s;
    } catch (const DataError& e) {
      std::cerr << "warning: " << e.what() << "; recomputing\n";
    }
  }
  LogMelSpectrogram fresh = compute_features(audio_path, spec);
  write_cache_entry(path, fresh, spec);
  // return the float32-quantized payload so hits and misses agree bit-exactly
  LogMelSpectrogram s = read_cache_entry(path, spec);
  s.source_id = audio_path;
  if (computed_out) *computed_out = true;
  return s;
}

// ---- cross-validation -------------------------------------------------------

CrossValidationSummary cross_validate(const DatasetManifest& manifest,
                                      const FoldRunFn& run_fold) {
  const std::size_t k = manifest.n_folds();
  if (k < 2) throw DataError("cross_validate: need at least 2 folds");
  for (std::size_t f = 0; f < k; ++f) {
    const bool any = std::any_of(
        manifest.entries.begin(), manifest.entries.end(),
        [&](const ManifestEntry& e) { return e.fold == static_cast<int>(f); });
    if (!any) throw DataError("cross_validate: empty fold " + std::to_string(f));
  }

  CrossValidationSummary summary;
  for (std::size_t f = 0; f < k; ++f) {
    DatasetManifest train_set = manifest;
    DatasetManifest eval_set = manifest;
    train_set.entries.clear();
    eval_set.entries.clear();
    for (const auto& e : manifest.entries) {
      // predefined folds partition the data; membership decides the side
      if (e.fold == static_cast<int>(f)) eval_set.entries.push_back(e);
      else train_set.entries.push_back(e);
    }
    FoldResult r = run_fold(train_set, eval_set, static_cast<int>(f));
    r.fold = static_cast<int>(f);
    summary.folds.push_back(std::move(r));
  }

  // population mean and std per metric
  for (const auto& [metric, value] : summary.folds[0].best_value) {
    (void)value;
    double mean = 0.0;
    for (const auto& fr : summary.folds) mean += fr.best_value.at(metric);
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (const auto& fr : summary.folds) {
      const double d = fr.best_value.at(metric) - mean;
      var += d * d;
    }
    var /= static_cast<double>(k);
    summary.mean[metric] = mean;
    summary.stddev[metric] = std::sqrt(var);
  }
  return summary;
}

// ---- synthetic data ---------------------------------------------------------

double synthetic_tone_hz(std::size_t c, std::size_t n) {
  // log-spaced tones, well separated on the mel axis
  const double lo = 220.0, hi = 6000.0;
  if (n <= 1) return lo;
  return lo * std::pow(hi / lo, static_cast<double>(c) /
                                    static_cast<double>(n - 1));
}

DatasetManifest generate_synthetic_dataset(const std::string& out_dir,
                                           const SyntheticSpec& spec) {
  if (spec.n_classes < 2)
    throw ConfigError("generate_synthetic_dataset: need >= 2 classes");
  if (spec.n_folds < 1)
    throw ConfigError("generate_synthetic_dataset: n_folds must be >= 1");
  fs::create_directories(out_dir);
  fs::create_directories(fs::path(out_dir) / "audio");

  Taxonomy taxonomy = spec.hierarchical
                          ? Taxonomy::synthetic_hierarchical(spec.n_classes)
                          : Taxonomy::synthetic_flat(spec.n_classes);
  taxonomy.save((fs::path(out_dir) / "taxonomy.tsv").string());

  Rng rng(spec.seed);
  DatasetManifest manifest;
  manifest.taxonomy_path = "taxonomy.tsv";
  manifest.task_mode = TaskMode::kMultilabel;
  manifest.base_dir = out_dir;

  std::ofstream ann((fs::path(out_dir) / "annotations.tsv").string(),
                    std::ios::trunc);
  ann << "sample_id\tannotator_id\tclass_id\tvote\n";

  const auto n_samples = spec.n_samples;
  const auto n_expert = static_cast<std::size_t>(
      std::llround(spec.expert_fraction * static_cast<double>(n_samples)));
  const auto clip_len = static_cast<std::size_t>(
      std::llround(spec.clip_seconds * spec.sample_rate));

  for (std::size_t i = 0; i < n_samples; ++i) {
    Rng sample_rng = rng.split(i);
    // 1-3 distinct classes per clip (capped by the class count)
    const std::size_t k =
        1 + sample_rng.uniform_index(std::min<std::size_t>(3, spec.n_classes));
    std::vector<int> labels(spec.n_classes, 0);
    std::size_t chosen = 0;
    while (chosen < k) {
      const std::size_t c = sample_rng.uniform_index(spec.n_classes);
      if (!labels[c]) {
        labels[c] = 1;
        ++chosen;
      }
    }

    Waveform w;
    w.sample_rate = spec.sample_rate;
    w.channels = {std::vector<double>(clip_len, 0.0)};
    const double amp = 0.8 / static_cast<double>(k);
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
      if (!labels[c]) continue;
      const double f = synthetic_tone_hz(c, spec.n_classes);
      const double phase = sample_rng.uniform(0.0, 2.0 * M_PI);
      for (std::size_t t = 0; t < clip_len; ++t)
        w.channels[0][t] +=
            amp * std::sin(2.0 * M_PI * f * static_cast<double>(t) /
                               spec.sample_rate +
                           phase);
    }
    // faint broadband noise floor
    for (std::size_t t = 0; t < clip_len; ++t)
      w.channels[0][t] += 0.001 * sample_rng.uniform(-1.0, 1.0);

    std::ostringstream id;
    id << "clip_";
    id.width(4);
    id.fill('0');
    id << i;
    const std::string rel = "audio/" + id.str() + ".wav";
    write_wav16((fs::path(out_dir) / rel).string(), w);

    ManifestEntry e;
    e.sample_id = id.str();
    e.path = rel;
    e.fold = static_cast<int>(i % static_cast<std::size_t>(spec.n_folds));
    const bool validate =
        static_cast<double>(i) >=
        (1.0 - spec.validate_fraction) * static_cast<double>(n_samples);
    e.split = validate ? "validate" : "train";
    e.fine_labels = labels;
    manifest.entries.push_back(e);

    const bool expert = i < n_expert;
    if (expert) {
      for (std::size_t c = 0; c < spec.n_classes; ++c)
        ann << id.str() << "\texpert\t" << c << "\t" << labels[c] << "\n";
    } else if (spec.annotator_flip_prob > 0.0) {
      for (int a = 0; a < 3; ++a)
        for (std::size_t c = 0; c < spec.n_classes; ++c) {
          int vote = labels[c];
          if (sample_rng.uniform() < spec.annotator_flip_prob) vote = 1 - vote;
          ann << id.str() << "\tannotator_" << a << "\t" << c << "\t" << vote
              << "\n";
        }
    }
  }

  const std::string manifest_path = (fs::path(out_dir) / "manifest.tsv").string();
  manifest.save(manifest_path);
  return DatasetManifest::load(manifest_path);
}

}  // namespace ust
