// bindings/pymodule.cc

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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ust/augment.h"
#include "ust/dsp.h"
#include "ust/metrics.h"
#include "ust/nn.h"
#include "ust/optimizer.h"

namespace py = pybind11;

namespace {

ust::SpectrogramConfig make_config(int n_fft, int hop_length, int n_mels,
                                   double f_min, double f_max, int sample_rate,
                                   double log_floor) {
  ust::SpectrogramConfig cfg;
  cfg.n_fft = n_fft;
  cfg.hop_length = hop_length;
  cfg.n_mels = n_mels;
  cfg.f_min = f_min;
  cfg.f_max = f_max;
  cfg.target_sample_rate = sample_rate;
  cfg.log_floor = log_floor;
  return cfg;
}

std::vector<std::vector<double>> log_mel_py(const std::vector<double>& samples,
                                            int sample_rate, int n_fft,
                                            int hop_length, int n_mels,
                                            double f_min, double f_max,
                                            int target_sample_rate,
                                            double log_floor) {
  ust::Waveform w;
  w.sample_rate = sample_rate;
  w.channels = {samples};
  if (sample_rate != target_sample_rate) w = ust::resample(w, target_sample_rate);
  auto cfg = make_config(n_fft, hop_length, n_mels, f_min, f_max,
                         target_sample_rate, log_floor);
  auto s = ust::log_mel(w, cfg);
  std::vector<std::vector<double>> out(s.n_frames,
                                       std::vector<double>(s.n_mels));
  for (std::size_t t = 0; t < s.n_frames; ++t)
    for (std::size_t m = 0; m < s.n_mels; ++m) out[t][m] = s.at(t, m);
  return out;
}

std::vector<double> resample_py(const std::vector<double>& samples,
                                int sample_rate, int target_sample_rate) {
  ust::Waveform w;
  w.sample_rate = sample_rate;
  w.channels = {samples};
  return ust::resample(w, target_sample_rate).channels[0];
}

ust::PredictionSet make_set(const std::vector<std::vector<double>>& scores,
                            const std::vector<std::vector<int>>& labels,
                            bool single_label) {
  ust::PredictionSet p;
  p.n_samples = scores.size();
  p.n_classes = scores.empty() ? 0 : scores[0].size();
  p.mode = single_label ? ust::TaskMode::kSingleLabel
                        : ust::TaskMode::kMultilabel;
  for (const auto& row : scores)
    p.scores.insert(p.scores.end(), row.begin(), row.end());
  for (const auto& row : labels)
    p.labels.insert(p.labels.end(), row.begin(), row.end());
  return p;
}

std::vector<double> mish_py(const std::vector<double>& values) {
  ust::GradMode off(false);
  auto t = ust::Tensor::from(values, {values.size()});
  return ust::nn::mish(t).values();
}

py::tuple mixup_py(const std::vector<double>& x1, const std::vector<double>& y1,
                   const std::vector<double>& x2, const std::vector<double>& y2,
                   double alpha, std::uint64_t seed) {
  ust::Rng rng(seed);
  auto r = ust::mixup(x1, y1, x2, y2, alpha, &rng);
  return py::make_tuple(r.x, r.y, r.lambda);
}

}  // namespace

PYBIND11_MODULE(ustcpp, m) {
  m.doc() = "urban sound tagging core: log-mel DSP, metrics, augmentation";

  m.def("log_mel", &log_mel_py, py::arg("samples"), py::arg("sample_rate"),
        py::arg("n_fft") = 2822, py::arg("hop_length") = 1103,
        py::arg("n_mels") = 64, py::arg("f_min") = 0.0,
        py::arg("f_max") = 8000.0, py::arg("target_sample_rate") = 44100,
        py::arg("log_floor") = 1e-10,
        "log-mel spectrogram (frames x mels) of a mono waveform");

  m.def("resample", &resample_py, py::arg("samples"), py::arg("sample_rate"),
        py::arg("target_sample_rate"),
        "band-limited resampling (64-tap windowed sinc)");

  m.def(
      "mel_filterbank",
      [](int n_fft, int n_mels, double f_min, double f_max, int sample_rate) {
        auto cfg = make_config(n_fft, 1, n_mels, f_min, f_max, sample_rate,
                               1e-10);
        return ust::mel_filterbank(cfg);
      },
      py::arg("n_fft") = 2822, py::arg("n_mels") = 64, py::arg("f_min") = 0.0,
      py::arg("f_max") = 8000.0, py::arg("sample_rate") = 44100);

  m.def("hz_to_mel", &ust::hz_to_mel, py::arg("hz"), py::arg("htk") = false);
  m.def("mel_to_hz", &ust::mel_to_hz, py::arg("mel"), py::arg("htk") = false);

  m.def("mish", &mish_py, py::arg("values"), "x * tanh(softplus(x))");

  m.def(
      "centralize_gradient",
      [](const std::vector<double>& grad, const std::vector<std::size_t>& shape) {
        return ust::centralize_gradient(grad, shape);
      },
      py::arg("grad"), py::arg("shape"),
      "subtract each output-channel slice's mean");

  m.def(
      "average_precision",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return ust::average_precision(ust::pr_curve(scores, labels));
      },
      py::arg("scores"), py::arg("labels"),
      "step-sum AP over unique operating points");

  m.def(
      "auprc_macro",
      [](const std::vector<std::vector<double>>& scores,
         const std::vector<std::vector<int>>& labels) {
        return ust::auprc_macro(make_set(scores, labels, false)).value;
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "auprc_micro",
      [](const std::vector<std::vector<double>>& scores,
         const std::vector<std::vector<int>>& labels) {
        return ust::auprc_micro(make_set(scores, labels, false));
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "f1_micro",
      [](const std::vector<std::vector<double>>& scores,
         const std::vector<std::vector<int>>& labels) {
        return ust::f1_micro(make_set(scores, labels, false));
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "map_11point",
      [](const std::vector<std::vector<double>>& scores,
         const std::vector<std::vector<int>>& labels) {
        return ust::map_11point(make_set(scores, labels, false));
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "accuracy",
      [](const std::vector<std::vector<double>>& scores,
         const std::vector<std::vector<int>>& labels) {
        return ust::accuracy(make_set(scores, labels, true));
      },
      py::arg("scores"), py::arg("labels"));

  m.def("mixup", &mixup_py, py::arg("x1"), py::arg("y1"), py::arg("x2"),
        py::arg("y2"), py::arg("alpha") = 1.0, py::arg("seed") = 0,
        "returns (x, y, lambda) with lambda ~ Beta(alpha, alpha)");
}
