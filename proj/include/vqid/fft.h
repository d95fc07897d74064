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

#ifndef VQID_FFT_H_
#define VQID_FFT_H_

#include <complex>
#include <cstddef>
#include <span>

namespace vqid {

// Real-input FFT of a fixed size backed by FFTW. An instance owns its plans
// and scratch buffers and must not be shared between threads; constructing
// one is cheap (FFTW_ESTIMATE planning under a process-wide lock).
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  // Zero-pads `in` to size(). out.size() must equal bins().
  void forward(std::span<const double> in,
               std::span<std::complex<double>> out);
  // |X_k|^2 for k in [0, bins()).
  void power_spectrum(std::span<const double> in, std::span<double> out);
  // Unnormalized inverse of a Hermitian half spectrum; out.size() == size().
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);
  // Inverse of a real half spectrum (imaginary parts zero), divided by size().
  void inverse_real(std::span<const double> in, std::span<double> out);

 private:
  std::size_t size_;
  double *time_ = nullptr;
  void *freq_ = nullptr;  // fftw_complex*
  void *forward_plan_ = nullptr;
  void *inverse_plan_ = nullptr;
};

std::size_t next_pow2(std::size_t n);

}  // namespace vqid

#endif  // VQID_FFT_H_
