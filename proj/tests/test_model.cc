// tests/test_model.cc

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

#include "ust/model.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "ust/checkpoint.h"
#include "ust/nn.h"
#include "ust/optimizer.h"

using namespace ust;

namespace {

LogMelSpectrogram fake_spec(std::size_t frames, Rng* rng) {
  LogMelSpectrogram s;
  s.n_frames = frames;
  s.n_mels = 64;
  s.data.resize(frames * 64);
  for (auto& v : s.data) v = rng->uniform(-23.0, 2.0);
  return s;
}

Tensor batch_from(const LogMelSpectrogram& s) {
  std::vector<double> data = s.data;
  return Tensor::from(std::move(data), {1, 1, s.n_frames, s.n_mels});
}

}  // namespace

TEST_CASE("extractor geometry: 400 frames -> 100, 64 mels -> 2 bins") {
  Rng rng(1);
  auto cfg = DualBackboneConfig::toy(8);
  DualBackboneModel model(cfg);
  auto s = fake_spec(400, &rng);
  GradMode off(false);
  Tensor g = model.global_features(batch_from(s), false);
  CHECK(g.shape() == Shape{1, 100, 2 * cfg.global.gru_hidden});
  // specific head preserves d_model = widths[4] * 2: the two freq bins left
  // after five halvings times the final channel width
  Tensor sp = model.specific_features(batch_from(s), false);
  CHECK(sp.shape() == Shape{1, 100, 64 * 2});
}

TEST_CASE("extractor geometry: 200 frames with toy widths -> 50 x 128") {
  Rng rng(2);
  auto cfg = DualBackboneConfig::toy(8);
  DualBackboneModel model(cfg);
  auto s = fake_spec(200, &rng);
  GradMode off(false);
  Tensor sp = model.specific_features(batch_from(s), false);
  CHECK(sp.shape() == Shape{1, 50, 128});
}

TEST_CASE("extractor rejects non-64-mel input") {
  Rng rng(3);
  auto cfg = DualBackboneConfig::tiny(2);
  DualBackboneModel model(cfg);
  Tensor bad = Tensor::zeros({1, 1, 8, 32});
  CHECK_THROWS_AS(model.forward(bad, false), std::invalid_argument);
}

TEST_CASE("model shape law: frame_probs rows = T/4 for several T") {
  auto cfg = DualBackboneConfig::tiny(2);
  DualBackboneModel model(cfg);
  Rng rng(5);
  GradMode off(false);
  for (std::size_t T : {8u, 160u, 200u, 400u}) {
    auto s = fake_spec(T, &rng);
    auto out = model.forward(batch_from(s), false);
    CHECK(out.frame_probs.shape() == Shape{1, T / 4, 2});
    CHECK(out.clip_probs.shape() == Shape{1, 2});
  }
}

TEST_CASE("predict pads to a multiple of four and bounds clip probs") {
  auto cfg = DualBackboneConfig::tiny(3);
  DualBackboneModel model(cfg);
  Rng rng(7);
  auto s = fake_spec(10, &rng);  // pads to 12
  s.config.log_floor = 1e-10;
  auto pred = model.predict(s);
  CHECK(pred.n_frames == 3);
  CHECK(pred.n_classes == 3);
  for (std::size_t c = 0; c < 3; ++c) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t t = 0; t < pred.n_frames; ++t) {
      lo = std::min(lo, pred.frame_probs[t * 3 + c]);
      hi = std::max(hi, pred.frame_probs[t * 3 + c]);
    }
    CHECK(pred.clip_probs[c] >= lo - 1e-12);
    CHECK(pred.clip_probs[c] <= hi + 1e-12);
  }
}

TEST_CASE("clip probability stays within the frame range on random inputs") {
  auto cfg = DualBackboneConfig::tiny(4);
  DualBackboneModel model(cfg);
  Rng rng(11);
  GradMode off(false);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = fake_spec(16, &rng);
    auto out = model.forward(batch_from(s), false);
    for (std::size_t c = 0; c < 4; ++c) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t t = 0; t < 4; ++t) {
        lo = std::min(lo, out.frame_probs.at({0, t, c}));
        hi = std::max(hi, out.frame_probs.at({0, t, c}));
      }
      CHECK(out.clip_probs.at({0, c}) >= lo - 1e-12);
      CHECK(out.clip_probs.at({0, c}) <= hi + 1e-12);
    }
  }
}

TEST_CASE("save then load reproduces forward outputs bit for bit") {
  auto cfg = DualBackboneConfig::tiny(2);
  DualBackboneModel a(cfg);
  Rng rng(13);
  auto s = fake_spec(8, &rng);
  GradMode off(false);
  auto before = a.forward(batch_from(s), false).clip_probs.values();

  const std::string path = "test_model_ckpt.json";
  a.save(path);
  cfg.init_seed = 999;  // load must overwrite the different init
  DualBackboneModel b(cfg);
  b.load(path);
  auto after = b.forward(batch_from(s), false).clip_probs.values();
  CHECK(before == after);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".bin");
}

TEST_CASE("load_pretrained_global: round trip, mismatch naming, freeze") {
  auto cfg = DualBackboneConfig::tiny(2);
  DualBackboneModel donor(cfg);
  const std::string path = "test_model_global.json";
  donor.save(path);

  // round trip into a fresh model: global features must match the donor's
  DualBackboneConfig cfg2 = cfg;
  cfg2.init_seed = 77;
  DualBackboneModel receiver(cfg2);
  receiver.load_pretrained_global(path);
  Rng rng(17);
  auto s = fake_spec(8, &rng);
  GradMode off(false);
  CHECK(receiver.global_features(batch_from(s), false).values() ==
        donor.global_features(batch_from(s), false).values());

  // mismatched widths: the error names the first offending tensor
  DualBackboneConfig wide = DualBackboneConfig::toy(2);
  DualBackboneModel mismatch(wide);
  try {
    mismatch.load_pretrained_global(path);
    FAIL("expected shape mismatch");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("global.stage1.conv1.weight") !=
          std::string::npos);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".bin");
}

TEST_CASE("freeze_global zeroes global gradients and pins parameters") {
  auto cfg = DualBackboneConfig::tiny(2);
  cfg.freeze_global = true;
  DualBackboneModel model(cfg);
  Rng rng(19);
  auto s = fake_spec(8, &rng);

  auto snapshot = [&]() {
    std::vector<std::vector<double>> vals;
    for (auto& p : model.parameters())
      if (p.name.rfind("global.", 0) == 0) vals.push_back(p.tensor.values());
    return vals;
  };
  auto before = snapshot();

  model.zero_grad();
  auto out = model.forward(batch_from(s), true);
  Tensor y = Tensor::from({1.0, 0.0}, {1, 2});
  nn::bce_loss(out.clip_probs, y).backward();

  for (auto& p : model.parameters()) {
    if (p.name.rfind("global.", 0) != 0) continue;
    CHECK_FALSE(p.tensor.requires_grad());
    for (double g : p.tensor.grad()) CHECK(g == 0.0);
  }

  Optimizer opt(OptimizerConfig{});
  opt.step(&model.parameters());
  CHECK(snapshot() == before);  // max abs delta == 0

  // non-global parameters did receive gradient
  bool some_updated = false;
  for (auto& p : model.parameters()) {
    if (p.name.rfind("global.", 0) == 0) continue;
    for (double g : p.tensor.grad())
      if (g != 0.0) some_updated = true;
  }
  CHECK(some_updated);
}

TEST_CASE("end-to-end gradient check on the tiny config") {
  auto cfg = DualBackboneConfig::tiny(2);
  DualBackboneModel model(cfg);
  Rng rng(23);
  Tensor y = Tensor::from({1.0, 0.0}, {1, 2});
  std::vector<double> base(8 * 64);
  for (auto& v : base) v = rng.uniform(-2.0, 0.5);
  Tensor x0 = Tensor::from(base, {1, 1, 8, 64});
  auto res = grad_check(
      [&](const Tensor& t) {
        auto out = model.forward(t, false);
        return nn::bce_loss(out.clip_probs, y);
      },
      x0, 1e-5, 1e-3, 24, &rng);
  CHECK_MESSAGE(res.pass, res.max_rel_error);
}

TEST_CASE("fixed seed yields a bit-identical loss trajectory") {
  auto run = [&]() {
    auto cfg = DualBackboneConfig::tiny(2);
    cfg.init_seed = 31;
    DualBackboneModel model(cfg);
    OptimizerConfig ocfg;
    ocfg.lr = 1e-2;
    Optimizer opt(ocfg);
    Rng rng(37);
    auto s = fake_spec(8, &rng);
    Tensor y = Tensor::from({1.0, 0.0}, {1, 2});
    std::vector<double> losses;
    for (int step = 0; step < 10; ++step) {
      model.zero_grad();
      auto out = model.forward(batch_from(s), false);
      Tensor loss = nn::bce_loss(out.clip_probs, y);
      losses.push_back(loss.item());
      loss.backward();
      opt.step(&model.parameters());
    }
    return losses;
  };
  CHECK(run() == run());
}

TEST_CASE("config validation rejects swapped heads") {
  auto cfg = DualBackboneConfig::toy(4);
  cfg.global.head = ExtractorConfig::Head::kMhsa;
  CHECK_THROWS_AS(DualBackboneModel{cfg}, ConfigError);

  auto cfg2 = DualBackboneConfig::toy(4);
  cfg2.specific.head = ExtractorConfig::Head::kBigru;
  CHECK_THROWS_AS(DualBackboneModel{cfg2}, ConfigError);

  auto cfg3 = DualBackboneConfig::toy(4);
  cfg3.global.conv_widths = {4, 8, 16};
  CHECK_THROWS_AS(DualBackboneModel{cfg3}, ConfigError);
}
