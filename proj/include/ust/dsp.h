// ust/dsp.h

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

#ifndef UST_DSP_H_
#define UST_DSP_H_

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "ust/common.h"

namespace ust {

// Raw audio. Samples are per-channel in [-1, 1].
struct Waveform {
  std::vector<std::vector<double>> channels;  // 1 or 2 entries
  int sample_rate = 0;

  std::size_t n_samples() const {
    return channels.empty() ? 0 : channels[0].size();
  }
  int n_channels() const { return static_cast<int>(channels.size()); }
  void validate() const;
};

// STFT / mel parameters. Defaults are the production configuration:
// n_fft 2822, periodic Hann, hop 1103, 64 mels, 0..8000 Hz at 44100 Hz.
struct SpectrogramConfig {
  int n_fft = 2822;
  int hop_length = 1103;
  int n_mels = 64;
  double f_min = 0.0;
  double f_max = 8000.0;
  int target_sample_rate = 44100;
  double log_floor = 1e-10;  // floor on power before the log
  bool htk_mel = false;      // default Slaney scale; HTK behind this switch

  void validate() const;
  std::string fingerprint() const;  // stable serialization for cache keys
};

struct LogMelSpectrogram {
  std::size_t n_frames = 0;
  std::size_t n_mels = 0;
  std::vector<double> data;  // row-major frames x mels
  SpectrogramConfig config;
  std::string source_id;

  double at(std::size_t frame, std::size_t mel) const {
    return data[frame * n_mels + mel];
  }
  double& at(std::size_t frame, std::size_t mel) {
    return data[frame * n_mels + mel];
  }
};

// Band-limited (windowed-sinc, 64-tap Kaiser) sample-rate conversion.
// Output length is round(n * target_sr / source_sr).
Waveform resample(const Waveform& w, int target_sr);

// Arithmetic mean of channels; mono input is returned unchanged.
Waveform to_mono(const Waveform& w);

// Centered STFT with periodic Hann window and reflect padding.
// Returns frames x (n_fft/2 + 1), frame count 1 + floor(n / hop).
std::vector<std::vector<std::complex<double>>> stft(
    const Waveform& w, const SpectrogramConfig& cfg);

// Hz <-> mel (Slaney: linear below 1 kHz, log above; or HTK).
double hz_to_mel(double hz, bool htk = false);
double mel_to_hz(double mel, bool htk = false);

// n_mels x (n_fft/2 + 1) triangular filters, area-normalized.
std::vector<std::vector<double>> mel_filterbank(const SpectrogramConfig& cfg);

// Full pipeline on a mono waveform at the target rate:
// log(max(log_floor, mel . |STFT|^2)), frames x mels.
LogMelSpectrogram log_mel(const Waveform& w, const SpectrogramConfig& cfg);

// Ingestion normalization used by the harness: resample + mono + pad/trim.
Waveform pad_or_trim(const Waveform& w, std::size_t target_samples);

}  // namespace ust

#endif  // UST_DSP_H_
