// tests/test_dsp.cc

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

#include <cmath>
#include <complex>
#include <cstdio>

#include "doctest.h"
#include "ust/fft.h"
#include "ust/wav_io.h"

using namespace ust;

namespace {

Waveform sine(double freq_hz, int sr, double seconds, double amp = 0.5) {
  Waveform w;
  w.sample_rate = sr;
  w.channels.resize(1);
  const auto n = static_cast<std::size_t>(std::llround(seconds * sr));
  w.channels[0].resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.channels[0][i] =
        amp * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / sr);
  return w;
}

// O(n^2) reference DFT, the oracle for the fast paths.
std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0, 0);
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * M_PI * static_cast<double>(j) *
                         static_cast<double>(k) / static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

std::size_t peak_bin(const std::vector<double>& x) {
  auto spec = naive_dft(x);
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t k = 1; k < spec.size() / 2; ++k) {
    if (std::abs(spec[k]) > best_mag) {
      best_mag = std::abs(spec[k]);
      best = k;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("bluestein DFT matches the naive oracle at n = 2822 factors") {
  Rng rng(99);
  for (std::size_t n : {7u, 34u, 166u, 256u, 334u}) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1, 1);
    DftPlan plan(n);
    auto fast = plan.forward_real(x);
    auto slow = naive_dft(x);
    double max_err = 0;
    for (std::size_t k = 0; k < n; ++k)
      max_err = std::max(max_err, std::abs(fast[k] - slow[k]));
    CHECK_MESSAGE(max_err < 1e-9, "n=", n, " err=", max_err);
  }
}

TEST_CASE("resample doubles the sample count at 2x rate") {
  Waveform w = sine(440, 22050, 100.0 / 22050.0);
  CHECK(w.n_samples() == 100);
  Waveform r = resample(w, 44100);
  CHECK(r.sample_rate == 44100);
  CHECK(r.n_samples() == 200);
}

TEST_CASE("resample preserves DC exactly") {
  Waveform w;
  w.sample_rate = 22050;
  w.channels = {std::vector<double>(500, 0.25)};
  Waveform r = resample(w, 44100);
  for (std::size_t i = 0; i < r.n_samples(); ++i)
    CHECK(r.channels[0][i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("resample keeps a 1 kHz tone at 1 kHz") {
  Waveform w = sine(1000, 22050, 0.2);
  Waveform r = resample(w, 44100);
  // expected bin: 1000 * n / 44100
  const std::size_t n = r.n_samples();
  const auto expected =
      static_cast<std::size_t>(std::llround(1000.0 * n / 44100.0));
  const std::size_t got = peak_bin(r.channels[0]);
  CHECK(std::llabs(static_cast<long long>(got) -
                   static_cast<long long>(expected)) <= 1);
}

TEST_CASE("to_mono averages, cancels, and passes mono through") {
  Waveform w;
  w.sample_rate = 44100;
  w.channels = {{0.5, -0.5, 0.25}, {0.5, -0.5, 0.25}};
  Waveform m = to_mono(w);
  CHECK(m.n_channels() == 1);
  CHECK(m.channels[0] == w.channels[0]);

  Waveform opp;
  opp.sample_rate = 44100;
  opp.channels = {{0.5, -0.25}, {-0.5, 0.25}};
  Waveform z = to_mono(opp);
  CHECK(z.channels[0] == std::vector<double>{0, 0});

  Waveform mono;
  mono.sample_rate = 44100;
  mono.channels = {{0.1, 0.2}};
  CHECK(to_mono(mono).channels[0] == mono.channels[0]);
}

TEST_CASE("stft of a unit impulse has a flat magnitude spectrum") {
  SpectrogramConfig cfg;
  cfg.n_fft = 8;
  cfg.hop_length = 4;
  cfg.target_sample_rate = 16;
  cfg.f_max = 8;
  Waveform w;
  w.sample_rate = 16;
  w.channels = {std::vector<double>(16, 0.0)};
  w.channels[0][8] = 1.0;  // impulse lands at the center of frame 2
  auto frames = stft(w, cfg);
  REQUIRE(frames.size() == 1 + 16 / 4);
  // frame 2 covers samples [8-4, 8+4); window value at offset 4 is 1
  for (std::size_t k = 0; k < frames[2].size(); ++k)
    CHECK(std::abs(frames[2][k]) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("stft rejects empty input") {
  SpectrogramConfig cfg;
  Waveform w;
  w.sample_rate = 44100;
  w.channels = {std::vector<double>{}};
  CHECK_THROWS_AS(stft(w, cfg), DataError);
}

TEST_CASE("stft frame counts reproduce the production geometry") {
  SpectrogramConfig cfg;  // defaults: 2822 / 1103
  Waveform w10 = sine(1000, 44100, 10.0);
  CHECK(w10.n_samples() == 441000);
  auto frames = stft(w10, cfg);
  CHECK(frames.size() == 400);
  CHECK(frames[0].size() == 1412);
}

TEST_CASE("stft peak bin for a 1 kHz tone") {
  SpectrogramConfig cfg;
  Waveform w = sine(1000, 44100, 1.0);
  auto frames = stft(w, cfg);
  // bin = round(1000 * 2822 / 44100) = 64
  const auto& mid = frames[frames.size() / 2];
  std::size_t best = 0;
  double best_mag = -1;
  for (std::size_t k = 0; k < mid.size(); ++k)
    if (std::abs(mid[k]) > best_mag) {
      best_mag = std::abs(mid[k]);
      best = k;
    }
  CHECK(std::llabs(static_cast<long long>(best) - 64) <= 1);
}

TEST_CASE("mel scale pins 1 kHz at 15 mel (Slaney)") {
  CHECK(hz_to_mel(1000.0) == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(mel_to_hz(15.0) == doctest::Approx(1000.0).epsilon(1e-9));
  CHECK(hz_to_mel(500.0) == doctest::Approx(7.5).epsilon(1e-12));
  // HTK variant differs
  CHECK(hz_to_mel(1000.0, true) == doctest::Approx(999.98553).epsilon(1e-6));
}

TEST_CASE("mel filterbank shape and row properties") {
  SpectrogramConfig cfg;
  auto bank = mel_filterbank(cfg);
  REQUIRE(bank.size() == 64);
  REQUIRE(bank[0].size() == 1412);
  for (const auto& row : bank) {
    // nonnegative, single contiguous support, unimodal
    std::size_t first = row.size(), last = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      CHECK(row[k] >= 0.0);
      if (row[k] > 0) {
        first = std::min(first, k);
        last = std::max(last, k);
      }
    }
    REQUIRE(first <= last);  // every filter catches at least one bin
    for (std::size_t k = first; k <= last; ++k) CHECK(row[k] > 0.0);
    std::size_t peak = first;
    for (std::size_t k = first; k <= last; ++k)
      if (row[k] > row[peak]) peak = k;
    for (std::size_t k = first; k < peak; ++k) CHECK(row[k] <= row[k + 1]);
    for (std::size_t k = peak; k < last; ++k) CHECK(row[k] >= row[k + 1]);
  }
}

TEST_CASE("mel filterbank rejects f_max above Nyquist") {
  SpectrogramConfig cfg;
  cfg.f_max = 30000;
  CHECK_THROWS_AS(mel_filterbank(cfg), ConfigError);
}

TEST_CASE("log_mel frame geometry: 10 s -> 400x64, 5 s -> 200x64") {
  SpectrogramConfig cfg;
  auto s10 = log_mel(sine(440, 44100, 10.0), cfg);
  CHECK(s10.n_frames == 400);
  CHECK(s10.n_mels == 64);
  auto s5 = log_mel(sine(440, 44100, 5.0), cfg);
  CHECK(s5.n_frames == 200);
  CHECK(s5.n_mels == 64);
}

TEST_CASE("log_mel of silence is the log floor everywhere") {
  SpectrogramConfig cfg;
  Waveform w;
  w.sample_rate = 44100;
  w.channels = {std::vector<double>(44100, 0.0)};
  auto s = log_mel(w, cfg);
  const double floor_val = std::log(cfg.log_floor);
  for (double v : s.data) CHECK(v == floor_val);
}

TEST_CASE("frame-count law holds across durations") {
  SpectrogramConfig cfg;
  for (double secs : {0.1, 0.37, 1.0, 2.5, 4.0, 7.3, 12.0}) {
    Waveform w = sine(250, 44100, secs);
    auto s = log_mel(w, cfg);
    CHECK(s.n_frames == 1 + w.n_samples() / 1103);
  }
}

TEST_CASE("log_mel determinism: identical bytes across runs") {
  SpectrogramConfig cfg;
  Waveform w = sine(750, 44100, 1.0);
  auto a = log_mel(w, cfg);
  auto b = log_mel(w, cfg);
  CHECK(a.data == b.data);
}

TEST_CASE("scaling up a waveform never decreases any log-mel cell") {
  SpectrogramConfig cfg;
  Waveform w = sine(333, 44100, 0.5, 0.3);
  Waveform louder = w;
  for (auto& v : louder.channels[0]) v *= 2.0;
  auto a = log_mel(w, cfg);
  auto b = log_mel(louder, cfg);
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(b.data[i] >= a.data[i]);
}

TEST_CASE("white-noise mel energy tracks spectral energy in the support") {
  SpectrogramConfig cfg;
  cfg.n_fft = 512;
  cfg.hop_length = 256;
  cfg.f_max = 8000;
  Rng rng(123);
  double mel_total = 0.0, spec_total = 0.0;
  // rebuild the band edges to undo area normalization and find the
  // fully-tiled region [center_0, center_63]
  std::vector<double> hz(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    hz[i] = mel_to_hz(hz_to_mel(cfg.f_min) +
                      (hz_to_mel(cfg.f_max) - hz_to_mel(cfg.f_min)) * i /
                          (cfg.n_mels + 1));
  auto bank = mel_filterbank(cfg);
  for (int trial = 0; trial < 100; ++trial) {
    Waveform w;
    w.sample_rate = 44100;
    w.channels = {std::vector<double>(8192)};
    for (auto& v : w.channels[0]) v = rng.uniform(-0.5, 0.5);
    auto frames = stft(w, cfg);
    for (const auto& fr : frames) {
      for (std::size_t m = 0; m < bank.size(); ++m) {
        double acc = 0;
        for (std::size_t k = 0; k < fr.size(); ++k)
          acc += bank[m][k] * std::norm(fr[k]);
        mel_total += acc * (hz[m + 2] - hz[m]) / 2.0;  // undo 2/(fr-fl)
      }
      for (std::size_t k = 0; k < fr.size(); ++k) {
        const double f = static_cast<double>(k) * 44100.0 / cfg.n_fft;
        if (f >= hz[1] && f <= hz[cfg.n_mels])
          spec_total += std::norm(fr[k]);
      }
    }
  }
  CHECK(mel_total / spec_total == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("pad_or_trim pads the tail with zeros or truncates") {
  Waveform w;
  w.sample_rate = 44100;
  w.channels = {std::vector<double>(100, 0.5)};
  Waveform p = pad_or_trim(w, 150);
  CHECK(p.n_samples() == 150);
  CHECK(p.channels[0][99] == 0.5);
  CHECK(p.channels[0][100] == 0.0);
  CHECK(p.channels[0][149] == 0.0);

  Waveform same = pad_or_trim(w, 100);
  CHECK(same.channels[0] == w.channels[0]);

  Waveform t = pad_or_trim(w, 60);
  CHECK(t.n_samples() == 60);
  CHECK(t.channels[0][59] == 0.5);
}

TEST_CASE("US8K-style target length yields 162 frames") {
  // hop * (162 - 1) = 1103 * 161 = 177583 samples
  SpectrogramConfig cfg;
  Waveform w = sine(500, 44100, 2.0);
  Waveform padded = pad_or_trim(w, 177583);
  auto s = log_mel(padded, cfg);
  CHECK(s.n_frames == 162);
}

TEST_CASE("wav round trip: 16-bit mono and stereo") {
  Waveform w = sine(440, 22050, 0.05, 0.4);
  w.channels.push_back(w.channels[0]);
  for (auto& v : w.channels[1]) v = -v;
  const std::string path = "test_roundtrip.wav";
  write_wav16(path, w);
  Waveform r = read_wav(path);
  REQUIRE(r.n_channels() == 2);
  REQUIRE(r.n_samples() == w.n_samples());
  CHECK(r.sample_rate == 22050);
  for (std::size_t i = 0; i < r.n_samples(); ++i) {
    CHECK(r.channels[0][i] == doctest::Approx(w.channels[0][i]).epsilon(1e-3));
    CHECK(r.channels[1][i] == doctest::Approx(w.channels[1][i]).epsilon(1e-3));
  }
  std::remove(path.c_str());
}

TEST_CASE("read_wav decodes 24-bit PCM") {
  // hand-assembled 24-bit mono file with four known samples
  const std::int32_t samples[4] = {0, 8388607, -8388608, 4194304};
  std::vector<unsigned char> bytes;
  auto put = [&](const char* s) { bytes.insert(bytes.end(), s, s + 4); };
  put("RIFF");
  append_le<std::uint32_t>(&bytes, 36 + 12);
  put("WAVE");
  put("fmt ");
  append_le<std::uint32_t>(&bytes, 16);
  append_le<std::uint16_t>(&bytes, 1);      // PCM
  append_le<std::uint16_t>(&bytes, 1);      // mono
  append_le<std::uint32_t>(&bytes, 8000);   // rate
  append_le<std::uint32_t>(&bytes, 8000 * 3);
  append_le<std::uint16_t>(&bytes, 3);
  append_le<std::uint16_t>(&bytes, 24);
  put("data");
  append_le<std::uint32_t>(&bytes, 12);
  for (std::int32_t s : samples) {
    bytes.push_back(static_cast<unsigned char>(s & 0xff));
    bytes.push_back(static_cast<unsigned char>((s >> 8) & 0xff));
    bytes.push_back(static_cast<unsigned char>((s >> 16) & 0xff));
  }
  const std::string path = "test_24bit.wav";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fwrite(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
  }
  Waveform w = read_wav(path);
  REQUIRE(w.n_samples() == 4);
  CHECK(w.channels[0][0] == 0.0);
  CHECK(w.channels[0][1] == doctest::Approx(8388607.0 / 8388608.0));
  CHECK(w.channels[0][2] == doctest::Approx(-1.0));
  CHECK(w.channels[0][3] == doctest::Approx(0.5));
  std::remove(path.c_str());
}

TEST_CASE("read_wav rejects garbage") {
  const std::string path = "test_garbage.wav";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("not a wav at all", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_wav(path), DataError);
  std::remove(path.c_str());
}
