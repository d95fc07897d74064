// Copyright 2026 The vqid Authors
//
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

#include "vqid/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "vqid/error.h"

namespace vqid {

namespace {
std::mutex &planner_mutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size < 2) throw UsageError("FFT size must be at least 2");
  std::lock_guard<std::mutex> lock(planner_mutex());
  time_ = fftw_alloc_real(size_);
  auto *freq = fftw_alloc_complex(bins());
  freq_ = freq;
  forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(size_), time_, freq,
                                       FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(size_), freq, time_,
                                       FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(time_);
  fftw_free(freq_);
}

void RealFft::forward(std::span<const double> in,
                      std::span<std::complex<double>> out) {
  std::size_t n = std::min(in.size(), size_);
  std::copy_n(in.begin(), n, time_);
  std::fill(time_ + n, time_ + size_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  auto *freq = static_cast<fftw_complex *>(freq_);
  for (std::size_t k = 0; k < bins(); ++k)
    out[k] = std::complex<double>(freq[k][0], freq[k][1]);
}

void RealFft::power_spectrum(std::span<const double> in, std::span<double> out) {
  std::size_t n = std::min(in.size(), size_);
  std::copy_n(in.begin(), n, time_);
  std::fill(time_ + n, time_ + size_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  auto *freq = static_cast<fftw_complex *>(freq_);
  for (std::size_t k = 0; k < bins(); ++k)
    out[k] = freq[k][0] * freq[k][0] + freq[k][1] * freq[k][1];
}

void RealFft::inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) {
  auto *freq = static_cast<fftw_complex *>(freq_);
  for (std::size_t k = 0; k < bins(); ++k) {
    freq[k][0] = in[k].real();
    freq[k][1] = in[k].imag();
  }
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  std::copy_n(time_, size_, out.begin());
}

void RealFft::inverse_real(std::span<const double> in, std::span<double> out) {
  auto *freq = static_cast<fftw_complex *>(freq_);
  for (std::size_t k = 0; k < bins(); ++k) {
    freq[k][0] = in[k];
    freq[k][1] = 0.0;
  }
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  const double scale = 1.0 / static_cast<double>(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = time_[i] * scale;
}

}  // namespace vqid
