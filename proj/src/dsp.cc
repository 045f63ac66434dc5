// ust/dsp.cc

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

#include "ust/dsp.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ust/fft.h"

namespace ust {

void Waveform::validate() const {
  if (sample_rate <= 0) throw DataError("Waveform: sample_rate <= 0");
  if (channels.empty() || channels.size() > 2)
    throw DataError("Waveform: channel count must be 1 or 2");
  for (const auto& ch : channels) {
    if (ch.size() != channels[0].size())
      throw DataError("Waveform: channel length mismatch");
    for (double s : ch) {
      if (!std::isfinite(s) || std::fabs(s) > 1.0 + 1e-6)
        throw DataError("Waveform: sample out of [-1, 1]");
    }
  }
}

void SpectrogramConfig::validate() const {
  if (n_fft <= 0 || hop_length <= 0 || n_mels <= 0)
    throw ConfigError("SpectrogramConfig: extents must be positive");
  if (hop_length > n_fft)
    throw ConfigError("SpectrogramConfig: hop_length > n_fft");
  if (!(f_min < f_max))
    throw ConfigError("SpectrogramConfig: f_min must be < f_max");
  if (f_max > target_sample_rate / 2.0)
    throw ConfigError("SpectrogramConfig: f_max above Nyquist");
  if (log_floor <= 0.0)
    throw ConfigError("SpectrogramConfig: log_floor must be > 0");
}

std::string SpectrogramConfig::fingerprint() const {
  std::ostringstream os;
  os << "nfft=" << n_fft << ";hop=" << hop_length << ";mels=" << n_mels
     << ";fmin=" << f_min << ";fmax=" << f_max << ";sr=" << target_sample_rate
     << ";floor=" << log_floor << ";htk=" << (htk_mel ? 1 : 0);
  return os.str();
}

namespace {

double sinc(double x) {
  if (std::fabs(x) < 1e-12) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

// Modified Bessel function of the first kind, order zero (series).
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double half_x = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half_x / k) * (half_x / k);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

}  // namespace

Waveform resample(const Waveform& w, int target_sr) {
  if (target_sr <= 0) throw ConfigError("resample: target_sr <= 0");
  w.validate();
  if (w.n_samples() == 0) throw DataError("resample: empty waveform");
  if (w.sample_rate == target_sr) return w;

  const double ratio =
      static_cast<double>(target_sr) / static_cast<double>(w.sample_rate);
  const std::size_t out_n = static_cast<std::size_t>(
      std::llround(static_cast<double>(w.n_samples()) * ratio));

  // 64-tap Kaiser-windowed sinc. When downsampling the kernel cutoff tracks
  // the output Nyquist; taps are normalized per output sample so DC is
  // preserved exactly.
  const int half_taps = 32;
  const double beta = 8.6;
  const double cutoff = std::min(1.0, ratio) * 0.985;
  const double i0_beta = bessel_i0(beta);

  Waveform out;
  out.sample_rate = target_sr;
  out.channels.resize(w.channels.size());
  for (std::size_t c = 0; c < w.channels.size(); ++c) {
    const auto& in = w.channels[c];
    const auto n = static_cast<long long>(in.size());
    auto& dst = out.channels[c];
    dst.resize(out_n);
    for (std::size_t m = 0; m < out_n; ++m) {
      const double pos = static_cast<double>(m) / ratio;
      const auto center = static_cast<long long>(std::floor(pos));
      double acc = 0.0, wsum = 0.0;
      for (long long j = center - half_taps + 1; j <= center + half_taps; ++j) {
        const double d = (pos - static_cast<double>(j)) * cutoff;
        const double frac =
            (pos - static_cast<double>(j)) / static_cast<double>(half_taps);
        if (std::fabs(frac) >= 1.0) continue;
        const double window =
            bessel_i0(beta * std::sqrt(1.0 - frac * frac)) / i0_beta;
        const double k = cutoff * sinc(d) * window;
        if (j < 0 || j >= n) continue;  // normalize over in-range taps only
        acc += k * in[static_cast<std::size_t>(j)];
        wsum += k;
      }
      dst[m] = wsum > 1e-12 ? acc / wsum : acc;
      // clamp tiny overshoot from the interpolation kernel
      dst[m] = std::clamp(dst[m], -1.0, 1.0);
    }
  }
  return out;
}

Waveform to_mono(const Waveform& w) {
  w.validate();
  if (w.n_channels() == 1) return w;
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.channels.resize(1);
  auto& dst = out.channels[0];
  dst.resize(w.n_samples());
  for (std::size_t i = 0; i < dst.size(); ++i)
    dst[i] = 0.5 * (w.channels[0][i] + w.channels[1][i]);
  return out;
}

namespace {

// Reflect-padded sample access: pad n_fft/2 each side, librosa-style
// reflection without repeating the edge sample.
double reflect_sample(const std::vector<double>& x, long long i) {
  const auto n = static_cast<long long>(x.size());
  if (n == 1) return x[0];
  const long long period = 2 * (n - 1);
  long long j = i % period;
  if (j < 0) j += period;
  if (j >= n) j = period - j;
  return x[static_cast<std::size_t>(j)];
}

}  // namespace

std::vector<std::vector<std::complex<double>>> stft(
    const Waveform& w, const SpectrogramConfig& cfg) {
  cfg.validate();
  w.validate();
  if (w.n_channels() != 1) throw DataError("stft: expected mono input");
  if (w.sample_rate != cfg.target_sample_rate)
    throw DataError("stft: waveform not at the configured sample rate");
  const auto& x = w.channels[0];
  if (x.empty()) throw DataError("stft: empty input");

  const std::size_t n_fft = static_cast<std::size_t>(cfg.n_fft);
  const std::size_t hop = static_cast<std::size_t>(cfg.hop_length);
  const std::size_t n_bins = n_fft / 2 + 1;
  const std::size_t n_frames = 1 + x.size() / hop;

  // periodic Hann
  std::vector<double> window(n_fft);
  for (std::size_t i = 0; i < n_fft; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                     static_cast<double>(n_fft));

  DftPlan plan(n_fft);
  std::vector<std::vector<std::complex<double>>> frames(n_frames);
  std::vector<double> buf(n_fft);
  const long long half = static_cast<long long>(n_fft) / 2;
  for (std::size_t t = 0; t < n_frames; ++t) {
    const long long start = static_cast<long long>(t * hop) - half;
    for (std::size_t i = 0; i < n_fft; ++i)
      buf[i] = window[i] * reflect_sample(x, start + static_cast<long long>(i));
    auto spec = plan.forward_real(buf);
    frames[t].assign(spec.begin(), spec.begin() + static_cast<long long>(n_bins));
  }
  return frames;
}

double hz_to_mel(double hz, bool htk) {
  if (htk) return 2595.0 * std::log10(1.0 + hz / 700.0);
  // Slaney: linear below 1 kHz (200/3 Hz per mel), log above
  const double f_sp = 200.0 / 3.0;
  const double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;  // 15.0
  const double logstep = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double mel_to_hz(double mel, bool htk) {
  if (htk) return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
  const double f_sp = 200.0 / 3.0;
  const double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

std::vector<std::vector<double>> mel_filterbank(const SpectrogramConfig& cfg) {
  cfg.validate();
  const std::size_t n_bins = static_cast<std::size_t>(cfg.n_fft) / 2 + 1;
  const std::size_t n_mels = static_cast<std::size_t>(cfg.n_mels);

  // n_mels + 2 band edges, evenly spaced on the mel scale
  std::vector<double> hz_pts(n_mels + 2);
  const double mel_min = hz_to_mel(cfg.f_min, cfg.htk_mel);
  const double mel_max = hz_to_mel(cfg.f_max, cfg.htk_mel);
  for (std::size_t i = 0; i < hz_pts.size(); ++i) {
    const double mel = mel_min + (mel_max - mel_min) * static_cast<double>(i) /
                                     static_cast<double>(n_mels + 1);
    hz_pts[i] = mel_to_hz(mel, cfg.htk_mel);
  }

  std::vector<std::vector<double>> bank(n_mels, std::vector<double>(n_bins, 0.0));
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double f_left = hz_pts[m], f_center = hz_pts[m + 1],
                 f_right = hz_pts[m + 2];
    // Slaney area normalization: constant energy per band
    const double norm = 2.0 / (f_right - f_left);
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.target_sample_rate /
                       static_cast<double>(cfg.n_fft);
      double v = 0.0;
      if (f > f_left && f < f_right) {
        v = f <= f_center ? (f - f_left) / (f_center - f_left)
                          : (f_right - f) / (f_right - f_center);
      }
      bank[m][k] = v * norm;
    }
  }
  return bank;
}

LogMelSpectrogram log_mel(const Waveform& w, const SpectrogramConfig& cfg) {
  auto frames = stft(w, cfg);
  auto bank = mel_filterbank(cfg);
  const std::size_t n_frames = frames.size();
  const std::size_t n_mels = bank.size();
  const std::size_t n_bins = frames.empty() ? 0 : frames[0].size();

  LogMelSpectrogram out;
  out.n_frames = n_frames;
  out.n_mels = n_mels;
  out.config = cfg;
  out.data.resize(n_frames * n_mels);
  std::vector<double> power(n_bins);
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t k = 0; k < n_bins; ++k) power[k] = std::norm(frames[t][k]);
    for (std::size_t m = 0; m < n_mels; ++m) {
      double acc = 0.0;
      const auto& row = bank[m];
      for (std::size_t k = 0; k < n_bins; ++k) acc += row[k] * power[k];
      out.data[t * n_mels + m] = std::log(std::max(cfg.log_floor, acc));
    }
  }
  return out;
}

Waveform pad_or_trim(const Waveform& w, std::size_t target_samples) {
  if (target_samples == 0) throw ConfigError("pad_or_trim: target == 0");
  w.validate();
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.channels.resize(w.channels.size());
  for (std::size_t c = 0; c < w.channels.size(); ++c) {
    auto ch = w.channels[c];
    ch.resize(target_samples, 0.0);  // tail-pad with zeros or tail-truncate
    out.channels[c] = std::move(ch);
  }
  return out;
}

}  // namespace ust
