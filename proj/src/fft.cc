// ust/fft.cc

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

#include "ust/fft.h"

#include <cmath>
#include <stdexcept>

namespace ust {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

void fft_pow2(std::vector<std::complex<double>>* a, bool inverse) {
  const std::size_t n = a->size();
  if (!is_pow2(n)) throw std::invalid_argument("fft_pow2: n not a power of 2");
  auto& v = *a;

  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(v[i], v[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = v[i + k];
        std::complex<double> t = v[i + k + len / 2] * w;
        v[i + k] = u + t;
        v[i + k + len / 2] = u - t;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : v) x *= inv;
  }
}

DftPlan::DftPlan(std::size_t n) : n_(n), pow2_(is_pow2(n)) {
  if (n == 0) throw std::invalid_argument("DftPlan: n == 0");
  if (pow2_) return;

  m_ = next_pow2(2 * n_ - 1);
  chirp_.resize(n_);
  for (std::size_t j = 0; j < n_; ++j) {
    // j^2 mod 2n keeps the angle argument small for large n
    const double phase =
        M_PI * static_cast<double>((j * j) % (2 * n_)) / static_cast<double>(n_);
    chirp_[j] = std::complex<double>(std::cos(phase), -std::sin(phase));
  }
  std::vector<std::complex<double>> filt(m_, std::complex<double>(0.0, 0.0));
  filt[0] = std::conj(chirp_[0]);
  for (std::size_t j = 1; j < n_; ++j) {
    filt[j] = std::conj(chirp_[j]);
    filt[m_ - j] = std::conj(chirp_[j]);
  }
  fft_pow2(&filt, false);
  filter_fft_ = std::move(filt);
}

std::vector<std::complex<double>> DftPlan::forward(
    const std::vector<std::complex<double>>& x) const {
  if (x.size() != n_) throw std::invalid_argument("DftPlan::forward: size");
  if (pow2_) {
    auto a = x;
    fft_pow2(&a, false);
    return a;
  }
  std::vector<std::complex<double>> a(m_, std::complex<double>(0.0, 0.0));
  for (std::size_t j = 0; j < n_; ++j) a[j] = x[j] * chirp_[j];
  fft_pow2(&a, false);
  for (std::size_t j = 0; j < m_; ++j) a[j] *= filter_fft_[j];
  fft_pow2(&a, true);
  std::vector<std::complex<double>> out(n_);
  for (std::size_t k = 0; k < n_; ++k) out[k] = a[k] * chirp_[k];
  return out;
}

std::vector<std::complex<double>> DftPlan::forward_real(
    const std::vector<double>& x) const {
  std::vector<std::complex<double>> cx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) cx[i] = x[i];
  return forward(cx);
}

}  // namespace ust
