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

#include "vqid/features.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vqid/binary_io.h"
#include "vqid/error.h"
#include "vqid/fft.h"

namespace vqid {

void MfccConfig::validate() const {
  if (!(frame_len_ms > 0) || !(hop_ms > 0))
    throw UsageError("frame_len_ms and hop_ms must be positive");
  if (frame_len_ms < hop_ms) throw UsageError("frame_len_ms must be >= hop_ms");
  if (n_mfcc < 1 || n_mel_filters < 1)
    throw UsageError("n_mfcc and n_mel_filters must be positive");
  if (n_mfcc > n_mel_filters) throw UsageError("n_mfcc must be <= n_mel_filters");
  if (!(pre_emphasis >= 0.0 && pre_emphasis < 1.0))
    throw UsageError("pre_emphasis must lie in [0, 1)");
  if (delta_window < 1) throw UsageError("delta_window must be >= 1");
  if (!(energy_floor > 0)) throw UsageError("energy_floor must be positive");
  if (fft_size < 0) throw UsageError("fft_size must be >= 0");
  if (low_freq_hz < 0 || high_freq_hz < 0 ||
      (high_freq_hz > 0 && high_freq_hz <= low_freq_hz))
    throw UsageError("invalid mel frequency range");
}

FrameGeometry frame_geometry(int sample_rate_hz, double frame_len_ms,
                             double hop_ms, int fft_size) {
  if (sample_rate_hz <= 0) throw UsageError("sample rate must be positive");
  FrameGeometry g;
  g.frame_len = static_cast<std::size_t>(
      std::floor(frame_len_ms * sample_rate_hz / 1000.0 + 0.5));
  g.hop = static_cast<std::size_t>(std::floor(hop_ms * sample_rate_hz / 1000.0 + 0.5));
  if (g.frame_len == 0 || g.hop == 0)
    throw UsageError("frame length and hop must be at least one sample");
  if (fft_size > 0) {
    if (static_cast<std::size_t>(fft_size) < g.frame_len)
      throw UsageError("fft_size is smaller than the frame length");
    g.fft_size = static_cast<std::size_t>(fft_size);
  } else {
    g.fft_size = next_pow2(g.frame_len);
  }
  return g;
}

std::size_t frame_count(std::size_t n, std::size_t frame_len, std::size_t hop) {
  if (n < frame_len || hop == 0) return 0;
  return 1 + (n - frame_len) / hop;
}

namespace {

std::size_t checked_frame_count(const AudioClip &clip, const FrameGeometry &g) {
  clip.validate();
  std::size_t n = frame_count(clip.samples.size(), g.frame_len, g.hop);
  if (n == 0)
    throw DataError("clip '" + clip.source_id + "' is too short: " +
                    std::to_string(clip.samples.size()) + " samples < frame length " +
                    std::to_string(g.frame_len));
  return n;
}

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  return w;
}

double clip_mean(const AudioClip &clip) {
  double s = 0.0;
  for (double x : clip.samples) s += x;
  return s / static_cast<double>(clip.samples.size());
}

std::vector<double> frame_times(std::size_t n, const FrameGeometry &g, int fs) {
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k)
    t[k] = static_cast<double>(k * g.hop) / fs;
  return t;
}

}  // namespace

Eigen::MatrixXd frame_signal(const AudioClip &clip, const MfccConfig &cfg) {
  cfg.validate();
  FrameGeometry g = frame_geometry(clip.sample_rate_hz, cfg.frame_len_ms,
                                   cfg.hop_ms, cfg.fft_size);
  std::size_t n = checked_frame_count(clip, g);
  Eigen::MatrixXd frames(n, g.frame_len);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < g.frame_len; ++i)
      frames(k, i) = clip.samples[k * g.hop + i];
  return frames;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank make_mel_filterbank(int n_filters, std::size_t fft_size,
                                  int sample_rate_hz, double low_hz,
                                  double high_hz) {
  const double nyquist = sample_rate_hz / 2.0;
  if (high_hz <= 0 || high_hz > nyquist) high_hz = nyquist;
  const double lo = hz_to_mel(low_hz), hi = hz_to_mel(high_hz);
  std::vector<double> edges(n_filters + 2);
  for (int m = 0; m < n_filters + 2; ++m)
    edges[m] = lo + (hi - lo) * m / (n_filters + 1);
  const std::size_t bins = fft_size / 2 + 1;
  MelFilterbank fb;
  fb.weights = Eigen::MatrixXd::Zero(n_filters, static_cast<Eigen::Index>(bins));
  for (int m = 0; m < n_filters; ++m) {
    fb.center_hz.push_back(mel_to_hz(edges[m + 1]));
    const double l = edges[m], c = edges[m + 1], r = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      double mel = hz_to_mel(static_cast<double>(k) * sample_rate_hz / fft_size);
      double w = 0.0;
      if (mel > l && mel <= c)
        w = (mel - l) / (c - l);
      else if (mel > c && mel < r)
        w = (r - mel) / (r - c);
      fb.weights(m, static_cast<Eigen::Index>(k)) = w;
    }
  }
  return fb;
}

namespace {

// Runs the shared MFCC front half: per-frame log energy and floored mel
// energies.
void analyze_frames(const AudioClip &clip, const MfccConfig &cfg,
                    Eigen::MatrixXd *fbank, Eigen::VectorXd *log_energy,
                    FrameGeometry *geometry) {
  cfg.validate();
  FrameGeometry g = frame_geometry(clip.sample_rate_hz, cfg.frame_len_ms,
                                   cfg.hop_ms, cfg.fft_size);
  std::size_t n = checked_frame_count(clip, g);
  MelFilterbank mel = make_mel_filterbank(cfg.n_mel_filters, g.fft_size,
                                          clip.sample_rate_hz, cfg.low_freq_hz,
                                          cfg.high_freq_hz);
  const std::vector<double> window = hamming(g.frame_len);
  const double mean = clip_mean(clip);
  RealFft fft(g.fft_size);
  std::vector<double> frame(g.frame_len), power(fft.bins());
  fbank->resize(static_cast<Eigen::Index>(n), cfg.n_mel_filters);
  log_energy->resize(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const double *src = clip.samples.data() + k * g.hop;
    double energy = 0.0;
    for (std::size_t i = 0; i < g.frame_len; ++i) {
      frame[i] = src[i] - mean;
      energy += frame[i] * frame[i];
    }
    (*log_energy)(static_cast<Eigen::Index>(k)) =
        std::log(std::max(energy, cfg.energy_floor));
    for (std::size_t i = g.frame_len - 1; i > 0; --i)
      frame[i] -= cfg.pre_emphasis * frame[i - 1];
    frame[0] *= 1.0 - cfg.pre_emphasis;
    for (std::size_t i = 0; i < g.frame_len; ++i) frame[i] *= window[i];
    fft.power_spectrum(frame, power);
    Eigen::Map<const Eigen::VectorXd> p(power.data(),
                                        static_cast<Eigen::Index>(power.size()));
    fbank->row(static_cast<Eigen::Index>(k)) =
        (mel.weights * p).cwiseMax(cfg.energy_floor).transpose();
  }
  *geometry = g;
}

}  // namespace

Eigen::MatrixXd mel_filterbank_energies(const AudioClip &clip,
                                        const MfccConfig &cfg) {
  Eigen::MatrixXd fbank;
  Eigen::VectorXd log_energy;
  FrameGeometry g;
  analyze_frames(clip, cfg, &fbank, &log_energy, &g);
  return fbank;
}

FeatureMatrix compute_mfcc(const AudioClip &clip, const MfccConfig &cfg) {
  Eigen::MatrixXd fbank;
  Eigen::VectorXd log_energy;
  FrameGeometry g;
  analyze_frames(clip, cfg, &fbank, &log_energy, &g);

  const int nf = cfg.n_mel_filters;
  Eigen::MatrixXd dct(nf, cfg.n_mfcc);
  for (int m = 0; m < nf; ++m)
    for (int j = 0; j < cfg.n_mfcc; ++j)
      dct(m, j) = std::sqrt((j == 0 ? 1.0 : 2.0) / nf) *
                  std::cos(std::numbers::pi * j * (m + 0.5) / nf);

  // Row-wise products keep identical frames bit-identical.
  const Eigen::MatrixXd log_fbank = fbank.array().log().matrix();
  FeatureMatrix out;
  out.values.resize(log_fbank.rows(), cfg.n_mfcc);
  for (Eigen::Index r = 0; r < log_fbank.rows(); ++r) out.values.row(r) = log_fbank.row(r) * dct;
  if (cfg.use_log_energy) out.values.col(0) = log_energy;
  out.frame_times = frame_times(static_cast<std::size_t>(fbank.rows()), g,
                                clip.sample_rate_hz);
  out.hop_ms = cfg.hop_ms;
  out.frame_len_ms = cfg.frame_len_ms;
  return out;
}

FeatureMatrix append_deltas(const FeatureMatrix &feat, int delta_window) {
  if (delta_window < 1) throw UsageError("delta_window must be >= 1");
  const Eigen::Index t = feat.rows(), d = feat.cols();
  if (t < 2 * delta_window + 1)
    throw DataError("append_deltas needs at least " +
                    std::to_string(2 * delta_window + 1) + " frames, got " +
                    std::to_string(t));
  double denom = 0.0;
  for (int n = 1; n <= delta_window; ++n) denom += 2.0 * n * n;
  auto regress = [&](const Eigen::MatrixXd &x) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(t, d);
    for (Eigen::Index i = 0; i < t; ++i) {
      for (int n = 1; n <= delta_window; ++n) {
        Eigen::Index ahead = std::min<Eigen::Index>(i + n, t - 1);
        Eigen::Index behind = std::max<Eigen::Index>(i - n, 0);
        out.row(i) += n * (x.row(ahead) - x.row(behind));
      }
    }
    return Eigen::MatrixXd(out / denom);
  };
  Eigen::MatrixXd delta = regress(feat.values);
  Eigen::MatrixXd accel = regress(delta);
  FeatureMatrix out = feat;
  out.values.resize(t, 3 * d);
  out.values << feat.values, delta, accel;
  return out;
}

FeatureMatrix cmvn(const FeatureMatrix &feat, bool normalize_variance) {
  const Eigen::Index t = feat.rows();
  if (t < 2) throw DataError("cmvn needs at least two frames");
  FeatureMatrix out = feat;
  Eigen::RowVectorXd mean = feat.values.colwise().mean();
  out.values.rowwise() -= mean;
  if (normalize_variance) {
    Eigen::RowVectorXd var = out.values.colwise().squaredNorm() / static_cast<double>(t);
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      if (var(j) >= 1e-12) out.values.col(j) /= std::sqrt(var(j));
  }
  return out;
}

FeatureMatrix compute_voice_features(const AudioClip &clip, const MfccConfig &cfg,
                                     bool normalize_variance) {
  return cmvn(append_deltas(compute_mfcc(clip, cfg), cfg.delta_window),
              normalize_variance);
}

Spectrogram spectrogram(const AudioClip &clip, const SpectrogramConfig &cfg) {
  if (!(cfg.floor > 0)) throw UsageError("spectrogram floor must be positive");
  FrameGeometry g = frame_geometry(clip.sample_rate_hz, cfg.frame_len_ms,
                                   cfg.hop_ms, cfg.fft_size);
  std::size_t n = checked_frame_count(clip, g);
  const std::vector<double> window = hamming(g.frame_len);
  RealFft fft(g.fft_size);
  std::vector<double> frame(g.frame_len), power(fft.bins());
  Spectrogram s;
  s.magnitude.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(fft.bins()));
  s.bin_hz = static_cast<double>(clip.sample_rate_hz) / g.fft_size;
  s.frame_times = frame_times(n, g, clip.sample_rate_hz);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < g.frame_len; ++i)
      frame[i] = clip.samples[k * g.hop + i] * window[i];
    fft.power_spectrum(frame, power);
    for (std::size_t b = 0; b < power.size(); ++b)
      s.magnitude(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b)) =
          std::max(std::sqrt(power[b]), cfg.floor);
  }
  return s;
}

void write_feature_cache(const std::filesystem::path &path,
                         const FeatureMatrix &feat) {
  BinaryWriter w(path, "VQFT", 1);
  w.u64(static_cast<std::uint64_t>(feat.rows()));
  w.u64(static_cast<std::uint64_t>(feat.cols()));
  w.f64(feat.hop_ms);
  w.f64(feat.frame_len_ms);
  w.mat_row_major(feat.values);
  w.close();
}

FeatureMatrix read_feature_cache(const std::filesystem::path &path) {
  BinaryReader r(path, "VQFT");
  if (r.version() != 1) throw DataError("unsupported VQFT version in " + path.string());
  std::uint64_t rows = r.u64(), cols = r.u64();
  if (rows > (1ull << 28) || cols > 4096 || rows * cols > (1ull << 30))
    throw DataError("implausible feature dimensions in " + path.string());
  FeatureMatrix feat;
  feat.hop_ms = r.f64();
  feat.frame_len_ms = r.f64();
  feat.values = r.mat_row_major(static_cast<Eigen::Index>(rows),
                                static_cast<Eigen::Index>(cols));
  r.expect_end();
  feat.frame_times.resize(rows);
  for (std::uint64_t k = 0; k < rows; ++k)
    feat.frame_times[k] = static_cast<double>(k) * feat.hop_ms / 1000.0;
  return feat;
}

}  // namespace vqid
