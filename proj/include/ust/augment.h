// ust/augment.h

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

#ifndef UST_AUGMENT_H_
#define UST_AUGMENT_H_

#include <cstdint>
#include <vector>

#include "ust/common.h"
#include "ust/dsp.h"

namespace ust {

// Training-time spectrogram augmentation: SpecAugment masks and warp,
// Mixup, Cutout. All draws come from the caller's Rng; same policy + seed
// reproduces the same output.
struct AugmentPolicy {
  int n_freq_masks = 2;
  int max_freq_width = 8;   // mel bins
  int n_time_masks = 2;
  int max_time_width = 30;  // frames
  int time_warp_w = 0;      // frames; 0 disables
  bool mixup_enabled = false;  // off by default: hurt the final dual-backbone
  double mixup_alpha = 1.0;
  int cutout_max_h = 0;  // mel bins; 0 disables
  int cutout_max_w = 0;  // frames
  // masked/cut cells take this value; log-domain silence, not 0
  double fill_value = std::log(1e-10);
  // fill with the spectrogram's mean instead of fill_value
  bool fill_with_mean = false;
  std::uint64_t rng_seed = 0;

  double fill_for(const LogMelSpectrogram& s) const;

  void validate(std::size_t n_frames, std::size_t n_mels) const;
};

LogMelSpectrogram freq_mask(const LogMelSpectrogram& s,
                            const AugmentPolicy& policy, Rng* rng);
LogMelSpectrogram time_mask(const LogMelSpectrogram& s,
                            const AugmentPolicy& policy, Rng* rng);
LogMelSpectrogram time_warp(const LogMelSpectrogram& s, int warp_w, Rng* rng);
LogMelSpectrogram cutout(const LogMelSpectrogram& s,
                         const AugmentPolicy& policy, Rng* rng);

struct MixupResult {
  std::vector<double> x;
  std::vector<double> y;
  double lambda = 1.0;
};

// x = lambda*x1 + (1-lambda)*x2, same for labels; lambda ~ Beta(alpha, alpha).
MixupResult mixup(const std::vector<double>& x1, const std::vector<double>& y1,
                  const std::vector<double>& x2, const std::vector<double>& y2,
                  double alpha, Rng* rng);

// Applies the full policy in a fixed order: warp, freq masks, time masks,
// cutout. Mixup is batch-level and handled by the training loop.
LogMelSpectrogram apply_policy(const LogMelSpectrogram& s,
                               const AugmentPolicy& policy, Rng* rng);

}  // namespace ust

#endif  // UST_AUGMENT_H_
