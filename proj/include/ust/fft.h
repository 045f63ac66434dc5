// ust/fft.h

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

#ifndef UST_FFT_H_
#define UST_FFT_H_

#include <complex>
#include <cstddef>
#include <vector>

namespace ust {

// Forward DFT of arbitrary length: radix-2 when n is a power of two,
// Bluestein's chirp-z otherwise. Plans are reusable across frames so the
// chirp tables are built once per STFT config.
class DftPlan {
 public:
  explicit DftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  // X[k] = sum_j x[j] exp(-2*pi*i*j*k/n)
  std::vector<std::complex<double>> forward(
      const std::vector<std::complex<double>>& x) const;
  std::vector<std::complex<double>> forward_real(
      const std::vector<double>& x) const;

 private:
  std::size_t n_;
  bool pow2_;
  // Bluestein state (unused when n is a power of two)
  std::size_t m_ = 0;  // convolution length, power of two >= 2n-1
  std::vector<std::complex<double>> chirp_;      // exp(-i*pi*j^2/n), length n
  std::vector<std::complex<double>> filter_fft_; // FFT of the chirp filter
};

// In-place iterative radix-2 FFT; n must be a power of two.
void fft_pow2(std::vector<std::complex<double>>* a, bool inverse);

}  // namespace ust

#endif  // UST_FFT_H_
