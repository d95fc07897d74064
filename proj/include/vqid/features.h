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

#ifndef VQID_FEATURES_H_
#define VQID_FEATURES_H_

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "vqid/audio.h"

namespace vqid {

struct MfccConfig {
  double frame_len_ms = 25.0;
  double hop_ms = 10.0;
  int n_mfcc = 13;
  int n_mel_filters = 26;
  int fft_size = 0;  // 0: next power of two >= frame length in samples
  double pre_emphasis = 0.97;
  int delta_window = 2;
  double energy_floor = 1e-10;
  // Coefficient 0 holds log frame energy instead of the zeroth cepstral
  // coefficient.
  bool use_log_energy = true;
  double low_freq_hz = 0.0;
  double high_freq_hz = 0.0;  // 0: Nyquist

  void validate() const;
};

// Sample-domain framing derived from millisecond settings. Lengths are
// rounded half-up, so 25 ms at 44.1 kHz is 1103 samples and 10 ms is 441.
struct FrameGeometry {
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::size_t fft_size = 0;
};
FrameGeometry frame_geometry(int sample_rate_hz, double frame_len_ms,
                             double hop_ms, int fft_size = 0);

// 1 + floor((n - frame_len) / hop) for n >= frame_len, else 0.
std::size_t frame_count(std::size_t n, std::size_t frame_len, std::size_t hop);

struct FeatureMatrix {
  Eigen::MatrixXd values;          // frames x dims
  std::vector<double> frame_times; // start of each frame, seconds
  double hop_ms = 10.0;
  double frame_len_ms = 25.0;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// Frame k holds samples [k*hop, k*hop + frame_len); partial trailing frames
// are dropped. Throws DataError if the clip is shorter than one frame.
Eigen::MatrixXd frame_signal(const AudioClip &clip, const MfccConfig &cfg);

// Triangular filters on the 2595*log10(1 + f/700) mel scale spanning
// [low_freq_hz, high_freq_hz], evaluated on FFT bin centres.
struct MelFilterbank {
  Eigen::MatrixXd weights;  // filters x fft bins
  std::vector<double> center_hz;
};
MelFilterbank make_mel_filterbank(int n_filters, std::size_t fft_size,
                                  int sample_rate_hz, double low_hz,
                                  double high_hz);
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Floored (not logged) filterbank energies, frames x n_mel_filters. Each
// frame is DC-removed (clip mean), pre-emphasized and Hamming-windowed.
Eigen::MatrixXd mel_filterbank_energies(const AudioClip &clip,
                                        const MfccConfig &cfg);

// n_mfcc cepstral coefficients per frame.
FeatureMatrix compute_mfcc(const AudioClip &clip, const MfccConfig &cfg);

// [x | delta | delta-delta] using the regression formula over +-window with
// edge replication. Requires at least 2*window + 1 frames.
FeatureMatrix append_deltas(const FeatureMatrix &feat, int delta_window);

// Per-utterance normalization to zero mean and, when normalize_variance is
// set, unit variance. Dimensions with variance below 1e-12 are only
// mean-subtracted. Requires at least two frames.
FeatureMatrix cmvn(const FeatureMatrix &feat, bool normalize_variance = true);

// MFCC -> deltas -> CMVN: the 39-dimensional front end of the i-vector system.
FeatureMatrix compute_voice_features(const AudioClip &clip, const MfccConfig &cfg,
                                     bool normalize_variance = true);

struct SpectrogramConfig {
  double frame_len_ms = 25.0;
  double hop_ms = 10.0;
  int fft_size = 0;
  double floor = 1e-10;
};

struct Spectrogram {
  Eigen::MatrixXd magnitude;  // frames x (fft_size/2 + 1), floored
  double bin_hz = 0.0;
  std::vector<double> frame_times;
};

// Short-time magnitude spectrum with a Hamming window, no pre-emphasis.
Spectrogram spectrogram(const AudioClip &clip, const SpectrogramConfig &cfg);

// Feature cache: "VQFT", u32 version, u64 rows, u64 cols, f64 hop_ms,
// f64 frame_len_ms, then rows*cols row-major float64.
void write_feature_cache(const std::filesystem::path &path,
                         const FeatureMatrix &feat);
FeatureMatrix read_feature_cache(const std::filesystem::path &path);

}  // namespace vqid

#endif  // VQID_FEATURES_H_
