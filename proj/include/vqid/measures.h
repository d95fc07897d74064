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

#ifndef VQID_MEASURES_H_
#define VQID_MEASURES_H_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vqid/audio.h"
#include "vqid/features.h"

namespace vqid {

struct MeasureConfig {
  double f0_min_hz = 60.0;
  double f0_max_hz = 500.0;
  double hop_ms = 10.0;
  // Normalized autocorrelation at the chosen lag must reach this for a frame
  // to count as voiced.
  double voicing_threshold = 0.45;
  // Frames whose peak amplitude is below this fraction of the clip peak are
  // unvoiced regardless of periodicity.
  double silence_threshold = 0.03;
  // Per-octave penalty on long lags; breaks ties between a period and its
  // multiples in favour of the shortest.
  double octave_cost = 0.01;
  // Path costs between neighbouring frames: per octave of F0 change, and per
  // voiced/unvoiced switch.
  double octave_jump_cost = 0.35;
  double voiced_unvoiced_cost = 0.14;
  int max_candidates = 15;

  double cpp_frame_ms = 40.0;
  int cpp_time_smooth = 10;   // frames
  int cpp_quef_smooth = 3;    // cepstral bins
  double lh_cutoff_hz = 4000.0;

  double ps_hop_ms = 10.0;
  double ps_erb_step = 0.1;
  double ps_candidate_step_oct = 1.0 / 48.0;

  MfccConfig mfcc;

  void validate() const;
};

struct F0Track {
  std::vector<std::optional<double>> f0_hz;  // nullopt marks an unvoiced frame
  std::vector<double> correlation;           // normalized autocorr at chosen lag
  std::vector<double> frame_times;           // frame centres, seconds
  double f0_min_hz = 0.0;
  double f0_max_hz = 0.0;
  double voicing_threshold = 0.0;

  std::size_t voiced_count() const;
};

// Autocorrelation pitch tracker: Hann-windowed frames three periods of f0_min
// long, window-corrected normalized autocorrelation, octave-cost peak
// candidates, a Viterbi path over frames and band-limited refinement of the
// chosen lag.
F0Track estimate_f0_contour(const AudioClip &clip, const MeasureConfig &cfg);

struct F0Stats {
  double mean = 0.0, sd = 0.0, max = 0.0, min = 0.0;
  double slope = 0.0;  // Hz/s, least squares over voiced frames
  bool fallback = false;  // fewer than two voiced frames: all fields zero
};
F0Stats f0_statistics(const F0Track &track);

struct ScalarMeasure {
  double value = 0.0;
  bool fallback = false;
};

// Mean over voiced frames of 10*log10(r / (1 - r)), r the normalized
// autocorrelation at the pitch lag. Falls back to 0 dB without voiced frames.
ScalarMeasure harmonic_to_noise_ratio(const F0Track &track);
ScalarMeasure harmonic_to_noise_ratio(const AudioClip &clip,
                                      const MeasureConfig &cfg);

struct CepstralAnalysis {
  double cpp = 0.0;       // mean smoothed CPP over frames, dB
  double cpp_sd = 0.0;
  double peak_quefrency_s = 0.0;  // median over frames
  double lh_ratio_db = 0.0;       // low/high band energy ratio at lh_cutoff_hz
  double lh_ratio_sd = 0.0;
  std::vector<double> frame_cpp;
};
CepstralAnalysis cepstral_analysis(const AudioClip &clip, const MeasureConfig &cfg);
double cepstral_peak_prominence(const AudioClip &clip, const MeasureConfig &cfg);

// Time-averaged maximum over candidate pitches of the correlation between
// the normalized ERB-scale loudness spectrum and a prime-harmonic sawtooth
// kernel. Silent frames score 0.
double pitch_strength(const AudioClip &clip, const MeasureConfig &cfg);

// Linear index over named measures. Defaults shipped with the project are
// placeholders, not published coefficients.
struct CsidCoefficients {
  double intercept = 0.0;
  std::map<std::string, double> weights;

  // Text file of `name = value` lines; `intercept` is the constant term.
  static CsidCoefficients load(const std::filesystem::path &path);
  static CsidCoefficients placeholder_defaults();
};

// Throws UsageError if a weighted term is absent from `measures`.
double csid(const std::map<std::string, double> &measures,
            const CsidCoefficients &coeffs);

enum BaselineWarning : unsigned {
  kWarnNone = 0,
  kWarnF0Fallback = 1u << 0,
  kWarnHnrFallback = 1u << 1,
  kWarnSilent = 1u << 2,
  kWarnCepstrumFallback = 1u << 3,
};

// [13 time-averaged MFCC | PS | CPP | CSID | HNR | F0 mean, sd, max, min,
// slope].
struct BaselineFeatureVector {
  static constexpr std::size_t kDim = 22;
  std::array<double, kDim> values{};
  unsigned warnings = kWarnNone;

  static const std::array<std::string, kDim> &names();
};

BaselineFeatureVector baseline_feature_vector(const AudioClip &clip,
                                              const MeasureConfig &cfg,
                                              const CsidCoefficients &coeffs);

// CSV with a header naming all 22 dimensions plus a `warnings` column.
void write_baseline_csv(
    const std::filesystem::path &path,
    const std::vector<std::pair<std::string, BaselineFeatureVector>> &rows);
std::vector<std::pair<std::string, BaselineFeatureVector>> read_baseline_csv(
    const std::filesystem::path &path);

}  // namespace vqid

#endif  // VQID_MEASURES_H_
