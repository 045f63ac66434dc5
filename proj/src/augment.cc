// ust/augment.cc

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

#include "ust/augment.h"

#include <algorithm>
#include <cmath>

namespace ust {

double AugmentPolicy::fill_for(const LogMelSpectrogram& s) const {
  if (!fill_with_mean) return fill_value;
  if (s.data.empty()) return fill_value;
  double acc = 0.0;
  for (double v : s.data) acc += v;
  return acc / static_cast<double>(s.data.size());
}

void AugmentPolicy::validate(std::size_t n_frames, std::size_t n_mels) const {
  if (max_freq_width < 0 || static_cast<std::size_t>(max_freq_width) > n_mels)
    throw ConfigError("AugmentPolicy: max_freq_width out of range");
  if (max_time_width < 0 || static_cast<std::size_t>(max_time_width) > n_frames)
    throw ConfigError("AugmentPolicy: max_time_width out of range");
  if (n_freq_masks < 0 || n_time_masks < 0)
    throw ConfigError("AugmentPolicy: negative mask count");
  if (cutout_max_h < 0 || static_cast<std::size_t>(cutout_max_h) > n_mels ||
      cutout_max_w < 0 || static_cast<std::size_t>(cutout_max_w) > n_frames)
    throw ConfigError("AugmentPolicy: cutout extent out of range");
  if (mixup_enabled && mixup_alpha <= 0.0)
    throw ConfigError("AugmentPolicy: mixup_alpha must be > 0");
  if (time_warp_w < 0) throw ConfigError("AugmentPolicy: negative warp");
}

LogMelSpectrogram freq_mask(const LogMelSpectrogram& s,
                            const AugmentPolicy& policy, Rng* rng) {
  policy.validate(s.n_frames, s.n_mels);
  LogMelSpectrogram out = s;
  const double fill = policy.fill_for(s);
  for (int i = 0; i < policy.n_freq_masks; ++i) {
    const auto f = static_cast<std::size_t>(
        rng->uniform_int(0, policy.max_freq_width));
    if (f == 0) continue;
    const auto f0 = static_cast<std::size_t>(
        rng->uniform_int(0, static_cast<long long>(s.n_mels - f)));
    for (std::size_t t = 0; t < s.n_frames; ++t)
      for (std::size_t m = f0; m < f0 + f; ++m) out.at(t, m) = fill;
  }
  return out;
}

LogMelSpectrogram time_mask(const LogMelSpectrogram& s,
                            const AugmentPolicy& policy, Rng* rng) {
  policy.validate(s.n_frames, s.n_mels);
  LogMelSpectrogram out = s;
  const double fill = policy.fill_for(s);
  for (int i = 0; i < policy.n_time_masks; ++i) {
    const auto w = static_cast<std::size_t>(
        rng->uniform_int(0, policy.max_time_width));
    if (w == 0) continue;
    const auto t0 = static_cast<std::size_t>(
        rng->uniform_int(0, static_cast<long long>(s.n_frames - w)));
    for (std::size_t t = t0; t < t0 + w; ++t)
      for (std::size_t m = 0; m < s.n_mels; ++m) out.at(t, m) = fill;
  }
  return out;
}

LogMelSpectrogram time_warp(const LogMelSpectrogram& s, int warp_w, Rng* rng) {
  if (warp_w == 0) return s;
  if (warp_w < 0 || static_cast<std::size_t>(warp_w) >= s.n_frames / 2)
    throw ConfigError("time_warp: W must satisfy W < frames/2");
  const auto frames = static_cast<long long>(s.n_frames);

  // anchor t0 in {W .. frames-1-W}, displaced to t0 + w
  const long long t0 = rng->uniform_int(warp_w, frames - 1 - warp_w);
  const long long w = rng->uniform_int(-warp_w, warp_w);
  if (w == 0) return s;
  const long long dst = t0 + w;

  LogMelSpectrogram out = s;
  // piecewise-linear source index: [0, dst] <- [0, t0], [dst, F-1] <- [t0, F-1]
  for (long long i = 0; i < frames; ++i) {
    double src;
    if (i <= dst) {
      src = dst == 0 ? 0.0
                     : static_cast<double>(i) * static_cast<double>(t0) /
                           static_cast<double>(dst);
    } else {
      src = static_cast<double>(t0) +
            static_cast<double>(i - dst) *
                static_cast<double>(frames - 1 - t0) /
                static_cast<double>(frames - 1 - dst);
    }
    const auto lo = static_cast<long long>(std::floor(src));
    const long long hi = std::min(lo + 1, frames - 1);
    const double frac = src - static_cast<double>(lo);
    for (std::size_t m = 0; m < s.n_mels; ++m) {
      const double a = s.at(static_cast<std::size_t>(lo), m);
      const double b = s.at(static_cast<std::size_t>(hi), m);
      out.at(static_cast<std::size_t>(i), m) = (1.0 - frac) * a + frac * b;
    }
  }
  return out;
}

LogMelSpectrogram cutout(const LogMelSpectrogram& s,
                         const AugmentPolicy& policy, Rng* rng) {
  policy.validate(s.n_frames, s.n_mels);
  LogMelSpectrogram out = s;
  if (policy.cutout_max_h == 0 || policy.cutout_max_w == 0) return out;
  const double fill = policy.fill_for(s);
  const auto h =
      static_cast<std::size_t>(rng->uniform_int(0, policy.cutout_max_h));
  const auto w =
      static_cast<std::size_t>(rng->uniform_int(0, policy.cutout_max_w));
  const auto top = rng->uniform_index(s.n_mels);
  const auto left = rng->uniform_index(s.n_frames);
  // clip to bounds
  const std::size_t bottom = std::min(top + h, s.n_mels);
  const std::size_t right = std::min(left + w, s.n_frames);
  for (std::size_t t = left; t < right; ++t)
    for (std::size_t m = top; m < bottom; ++m) out.at(t, m) = fill;
  return out;
}

MixupResult mixup(const std::vector<double>& x1, const std::vector<double>& y1,
                  const std::vector<double>& x2, const std::vector<double>& y2,
                  double alpha, Rng* rng) {
  if (x1.size() != x2.size() || y1.size() != y2.size())
    throw std::invalid_argument("mixup: shape mismatch");
  if (alpha <= 0.0) throw std::invalid_argument("mixup: alpha must be > 0");
  MixupResult r;
  r.lambda = rng->beta(alpha, alpha);
  r.x.resize(x1.size());
  r.y.resize(y1.size());
  for (std::size_t i = 0; i < x1.size(); ++i)
    r.x[i] = r.lambda * x1[i] + (1.0 - r.lambda) * x2[i];
  for (std::size_t i = 0; i < y1.size(); ++i)
    r.y[i] = r.lambda * y1[i] + (1.0 - r.lambda) * y2[i];
  return r;
}

LogMelSpectrogram apply_policy(const LogMelSpectrogram& s,
                               const AugmentPolicy& policy, Rng* rng) {
  policy.validate(s.n_frames, s.n_mels);
  LogMelSpectrogram out = s;
  if (policy.time_warp_w > 0) out = time_warp(out, policy.time_warp_w, rng);
  out = freq_mask(out, policy, rng);
  out = time_mask(out, policy, rng);
  if (policy.cutout_max_h > 0 && policy.cutout_max_w > 0)
    out = cutout(out, policy, rng);
  return out;
}

}  // namespace ust
