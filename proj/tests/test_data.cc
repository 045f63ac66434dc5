// tests/test_data.cc

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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "ust/wav_io.h"

using namespace ust;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / name;
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("taxonomy round trip and coarse OR") {
  Taxonomy t = Taxonomy::synthetic_hierarchical(5);
  CHECK(t.n_coarse() == 3);
  CHECK(t.n_fine() == 5);
  auto coarse = t.coarse_from_fine({1, 0, 0, 1, 0});
  CHECK(coarse == std::vector<int>{1, 1, 0});

  TempDir dir("ust_tax_test");
  const std::string path = (dir.path / "tax.tsv").string();
  t.save(path);
  Taxonomy back = Taxonomy::load(path);
  CHECK(back.fine_names == t.fine_names);
  CHECK(back.fine_parent == t.fine_parent);
  CHECK(back.coarse_names == t.coarse_names);
}

TEST_CASE("synthetic dataset: deterministic, exact labels, learnable") {
  TempDir dir("ust_synth_test");
  SyntheticSpec spec;
  spec.n_samples = 24;
  spec.n_classes = 2;
  spec.clip_seconds = 0.25;
  spec.seed = 42;
  spec.n_folds = 2;
  auto manifest = generate_synthetic_dataset((dir.path / "a").string(), spec);
  CHECK(manifest.entries.size() == 24);

  // determinism: regenerate elsewhere, compare wav bytes and manifest rows
  auto manifest2 = generate_synthetic_dataset((dir.path / "b").string(), spec);
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    CHECK(manifest.entries[i].sample_id == manifest2.entries[i].sample_id);
    CHECK(manifest.entries[i].fine_labels == manifest2.entries[i].fine_labels);
    std::ifstream fa(manifest.resolve(manifest.entries[i].path),
                     std::ios::binary);
    std::ifstream fb(manifest2.resolve(manifest2.entries[i].path),
                     std::ios::binary);
    std::string ba((std::istreambuf_iterator<char>(fa)),
                   std::istreambuf_iterator<char>());
    std::string bb((std::istreambuf_iterator<char>(fb)),
                   std::istreambuf_iterator<char>());
    CHECK(ba == bb);
  }

  // learnability oracle: nearest-centroid on mean mel energy separates two
  // well-spaced tone classes
  SpectrogramConfig cfg;
  FeaturizeSpec fspec;
  fspec.spectrogram = cfg;
  std::vector<std::vector<double>> mean_mels;
  std::vector<int> which;  // -1 multi-tone, else the single class
  for (const auto& e : manifest.entries) {
    auto s = compute_features(manifest.resolve(e.path), fspec);
    std::vector<double> mm(64, 0.0);
    for (std::size_t t = 0; t < s.n_frames; ++t)
      for (std::size_t m = 0; m < 64; ++m) mm[m] += s.at(t, m);
    for (auto& v : mm) v /= static_cast<double>(s.n_frames);
    mean_mels.push_back(mm);
    int single = -1;
    if (e.fine_labels[0] + e.fine_labels[1] == 1)
      single = e.fine_labels[1] == 1 ? 1 : 0;
    which.push_back(single);
  }
  std::vector<double> c0(64, 0.0), c1(64, 0.0);
  int n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < mean_mels.size(); ++i) {
    if (which[i] == 0) {
      for (int m = 0; m < 64; ++m) c0[m] += mean_mels[i][m];
      ++n0;
    } else if (which[i] == 1) {
      for (int m = 0; m < 64; ++m) c1[m] += mean_mels[i][m];
      ++n1;
    }
  }
  REQUIRE(n0 > 0);
  REQUIRE(n1 > 0);
  for (int m = 0; m < 64; ++m) {
    c0[m] /= n0;
    c1[m] /= n1;
  }
  int hits = 0, total = 0;
  for (std::size_t i = 0; i < mean_mels.size(); ++i) {
    if (which[i] < 0) continue;
    double d0 = 0, d1 = 0;
    for (int m = 0; m < 64; ++m) {
      d0 += (mean_mels[i][m] - c0[m]) * (mean_mels[i][m] - c0[m]);
      d1 += (mean_mels[i][m] - c1[m]) * (mean_mels[i][m] - c1[m]);
    }
    const int pred = d0 <= d1 ? 0 : 1;
    hits += pred == which[i];
    ++total;
  }
  REQUIRE(total > 0);
  CHECK(static_cast<double>(hits) / total > 0.95);
}

TEST_CASE("synthetic annotator noise hits the configured flip rate") {
  TempDir dir("ust_noise_test");
  SyntheticSpec spec;
  spec.n_samples = 150;
  spec.n_classes = 8;
  spec.clip_seconds = 0.05;
  spec.annotator_flip_prob = 0.3;
  spec.seed = 7;
  auto manifest = generate_synthetic_dataset((dir.path / "d").string(), spec);

  // compare votes against the exact labels
  std::ifstream ann((dir.path / "d" / "annotations.tsv").string());
  REQUIRE(ann.good());
  std::string line;
  std::getline(ann, line);  // header
  std::size_t flips = 0, votes = 0;
  std::map<std::string, std::vector<int>> truth;
  for (const auto& e : manifest.entries) truth[e.sample_id] = e.fine_labels;
  while (std::getline(ann, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string sample, annotator, class_s, vote_s;
    std::getline(ls, sample, '\t');
    std::getline(ls, annotator, '\t');
    std::getline(ls, class_s, '\t');
    std::getline(ls, vote_s, '\t');
    if (annotator == "expert") continue;
    const int expect = truth[sample][std::stoul(class_s)];
    flips += std::stoi(vote_s) != expect;
    ++votes;
  }
  REQUIRE(votes >= 3000);
  const double rate = static_cast<double>(flips) / static_cast<double>(votes);
  CHECK(rate == doctest::Approx(0.3).epsilon(0.067));  // within +-2 points
}

TEST_CASE("manifest round trip preserves rows; folds partition") {
  TempDir dir("ust_manifest_test");
  SyntheticSpec spec;
  spec.n_samples = 12;
  spec.n_classes = 3;
  spec.clip_seconds = 0.05;
  spec.n_folds = 3;
  auto manifest = generate_synthetic_dataset((dir.path / "m").string(), spec);
  CHECK(manifest.n_folds() == 3);

  // every sample in exactly one fold; union equals the manifest
  std::set<std::string> seen;
  for (std::size_t f = 0; f < 3; ++f)
    for (const auto& e : manifest.entries)
      if (e.fold == static_cast<int>(f)) CHECK(seen.insert(e.sample_id).second);
  CHECK(seen.size() == manifest.entries.size());

  const std::string copy = (dir.path / "copy.tsv").string();
  manifest.save(copy);
  // base dir changes, content rows must survive
  auto text_of = [](const std::string& p) {
    std::ifstream f(p);
    std::string all((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
    return all;
  };
  CHECK(text_of(copy) ==
        text_of((dir.path / "m" / "manifest.tsv").string()));
}

TEST_CASE("manifest validation rejects duplicates and fold gaps") {
  Taxonomy t = Taxonomy::synthetic_flat(2);
  DatasetManifest m;
  m.entries.push_back({"a", "a.wav", 0, "train", {1, 0}});
  m.entries.push_back({"a", "b.wav", 0, "train", {0, 1}});
  CHECK_THROWS_AS(m.validate(t), DataError);

  DatasetManifest gap;
  gap.entries.push_back({"a", "a.wav", 0, "train", {1, 0}});
  gap.entries.push_back({"b", "b.wav", 2, "train", {0, 1}});
  CHECK_THROWS_AS(gap.validate(t), DataError);
}

TEST_CASE("feature cache: second call hits, payload bit-identical") {
  TempDir dir("ust_cache_test");
  SyntheticSpec sp;
  sp.n_samples = 1;
  sp.n_classes = 2;
  sp.clip_seconds = 0.1;
  auto manifest = generate_synthetic_dataset((dir.path / "d").string(), sp);
  const std::string wav = manifest.resolve(manifest.entries[0].path);

  FeatureCache cache((dir.path / "cache").string());
  FeaturizeSpec spec;
  bool computed = false;
  auto first = cache.get_or_compute(wav, spec, &computed);
  CHECK(computed);
  auto second = cache.get_or_compute(wav, spec, &computed);
  CHECK_FALSE(computed);
  CHECK(first.data == second.data);
  CHECK(first.n_frames == second.n_frames);
}

TEST_CASE("feature cache: config change produces a new key") {
  FeaturizeSpec a, b;
  b.target_samples = 1000;
  std::vector<unsigned char> bytes{1, 2, 3};
  CHECK(FeatureCache::key_for(bytes, a) != FeatureCache::key_for(bytes, b));
  FeaturizeSpec c;
  c.spectrogram.n_mels = 32;
  CHECK(FeatureCache::key_for(bytes, a) != FeatureCache::key_for(bytes, c));
}

TEST_CASE("feature cache: corrupt entry is detected and recomputed") {
  TempDir dir("ust_corrupt_test");
  SyntheticSpec sp;
  sp.n_samples = 1;
  sp.n_classes = 2;
  sp.clip_seconds = 0.1;
  auto manifest = generate_synthetic_dataset((dir.path / "d").string(), sp);
  const std::string wav = manifest.resolve(manifest.entries[0].path);

  FeatureCache cache((dir.path / "cache").string());
  FeaturizeSpec spec;
  auto first = cache.get_or_compute(wav, spec);

  // truncate the entry: checksum must fail, then recompute must succeed
  std::string entry;
  for (const auto& f : fs::directory_iterator(cache.dir()))
    entry = f.path().string();
  REQUIRE_FALSE(entry.empty());
  {
    auto size = fs::file_size(entry);
    fs::resize_file(entry, size - 32);
  }
  CHECK_THROWS_AS(read_cache_entry(entry, spec), DataError);
  bool computed = false;
  auto again = cache.get_or_compute(wav, spec, &computed);
  CHECK(computed);
  CHECK(again.data == first.data);
}

TEST_CASE("cross_validate: fold partition, mean and population std") {
  TempDir dir("ust_cv_test");
  SyntheticSpec sp;
  sp.n_samples = 8;
  sp.n_classes = 2;
  sp.clip_seconds = 0.05;
  sp.n_folds = 2;
  auto manifest = generate_synthetic_dataset((dir.path / "d").string(), sp);

  std::vector<std::pair<std::size_t, std::size_t>> sizes;
  auto summary = cross_validate(
      manifest, [&](const DatasetManifest& train_set,
                    const DatasetManifest& eval_set, int fold) {
        // folds never overlap
        std::set<std::string> train_ids;
        for (const auto& e : train_set.entries) train_ids.insert(e.sample_id);
        for (const auto& e : eval_set.entries)
          CHECK(train_ids.count(e.sample_id) == 0);
        sizes.push_back({train_set.entries.size(), eval_set.entries.size()});
        FoldResult r;
        r.best_value["score"] = fold == 0 ? 0.8 : 0.9;
        r.best_step["score"] = 3;
        return r;
      });
  REQUIRE(summary.folds.size() == 2);
  CHECK(sizes[0].first + sizes[0].second == 8);
  CHECK(summary.mean["score"] == doctest::Approx(0.85).epsilon(1e-15));
  // population std: sqrt(((0.8-0.85)^2 + (0.9-0.85)^2)/2) = 0.05
  CHECK(summary.stddev["score"] == doctest::Approx(0.05).epsilon(1e-12));

  // identical scores give zero spread
  auto flat = cross_validate(manifest, [&](const DatasetManifest&,
                                           const DatasetManifest&, int) {
    FoldResult r;
    r.best_value["score"] = 0.8;
    r.best_step["score"] = 1;
    return r;
  });
  CHECK(flat.mean["score"] == doctest::Approx(0.8));
  CHECK(flat.stddev["score"] == 0.0);
}

TEST_CASE("cross_validate rejects single-fold manifests") {
  TempDir dir("ust_cv1_test");
  SyntheticSpec sp;
  sp.n_samples = 4;
  sp.n_classes = 2;
  sp.clip_seconds = 0.05;
  sp.n_folds = 1;
  auto manifest = generate_synthetic_dataset((dir.path / "d").string(), sp);
  CHECK_THROWS_AS(
      cross_validate(manifest,
                     [](const DatasetManifest&, const DatasetManifest&, int) {
                       return FoldResult{};
                     }),
      DataError);
}
