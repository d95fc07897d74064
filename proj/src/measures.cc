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

#include "vqid/measures.h"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "vqid/config.h"
#include "vqid/error.h"
#include "vqid/fft.h"

namespace vqid {

void MeasureConfig::validate() const {
  if (!(f0_min_hz > 0) || !(f0_max_hz > f0_min_hz))
    throw UsageError("require 0 < f0_min_hz < f0_max_hz");
  if (!(hop_ms > 0) || !(ps_hop_ms > 0)) throw UsageError("hop must be positive");
  if (!(voicing_threshold > 0 && voicing_threshold < 1))
    throw UsageError("voicing_threshold must lie in (0, 1)");
  if (silence_threshold < 0 || silence_threshold >= 1)
    throw UsageError("silence_threshold must lie in [0, 1)");
  if (!(cpp_frame_ms > 0)) throw UsageError("cpp_frame_ms must be positive");
  if (cpp_time_smooth < 1 || cpp_quef_smooth < 1)
    throw UsageError("CPP smoothing widths must be >= 1");
  if (octave_jump_cost < 0 || voiced_unvoiced_cost < 0 || max_candidates < 1)
    throw UsageError("pitch path costs must be >= 0 and max_candidates >= 1");
  if (!(ps_erb_step > 0) || !(ps_candidate_step_oct > 0))
    throw UsageError("pitch strength grid steps must be positive");
  mfcc.validate();
}

std::size_t F0Track::voiced_count() const {
  return static_cast<std::size_t>(
      std::count_if(f0_hz.begin(), f0_hz.end(), [](auto &f) { return f.has_value(); }));
}

namespace {

std::size_t samples_for_ms(double ms, int fs) {
  return static_cast<std::size_t>(std::floor(ms * fs / 1000.0 + 0.5));
}

double mean_of(const std::vector<double> &x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double sample_sd(const std::vector<double> &x) {
  if (x.size() < 2) return 0.0;
  double m = mean_of(x), ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 0.5) / n);
  return w;
}

std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * (i + 0.5) / n);
  return w;
}

// Autocorrelation at a fractional lag from the power spectrum of a
// zero-padded frame: the trigonometric interpolant of the circular
// autocorrelation sequence.
double bandlimited_autocorr(const std::vector<double> &power, std::size_t nfft,
                            double lag) {
  const std::size_t half = nfft / 2;
  const double theta = 2.0 * std::numbers::pi * lag / static_cast<double>(nfft);
  const std::complex<double> step(std::cos(theta), std::sin(theta));
  std::complex<double> z = step;
  double acc = power[0];
  for (std::size_t k = 1; k < half; ++k) {
    acc += 2.0 * power[k] * z.real();
    z *= step;
  }
  acc += power[half] * std::cos(std::numbers::pi * lag);
  return acc / static_cast<double>(nfft);
}

}  // namespace

F0Track estimate_f0_contour(const AudioClip &clip, const MeasureConfig &cfg) {
  cfg.validate();
  clip.validate();
  const int fs = clip.sample_rate_hz;
  const std::size_t win = samples_for_ms(3000.0 / cfg.f0_min_hz, fs);
  const std::size_t hop = std::max<std::size_t>(1, samples_for_ms(cfg.hop_ms, fs));
  const std::size_t n_samples = clip.samples.size();
  if (n_samples < win)
    throw DataError("clip '" + clip.source_id +
                    "' is shorter than three periods of f0_min");
  const double tau_min = fs / cfg.f0_max_hz, tau_max = fs / cfg.f0_min_hz;
  const std::size_t lag_lo = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(tau_min)));
  const std::size_t lag_hi = static_cast<std::size_t>(std::ceil(tau_max));
  const std::size_t nfft = next_pow2(win + lag_hi + 2);
  if (lag_hi + 2 >= win)
    throw UsageError("f0 search range exceeds the analysis window");

  const std::vector<double> window = hann(win);
  RealFft fft(nfft);
  std::vector<double> buf(win), power(fft.bins()), ac(nfft);

  // Normalized autocorrelation of the window, used to undo its taper.
  fft.power_spectrum(window, power);
  fft.inverse_real(power, ac);
  std::vector<double> rw(lag_hi + 3);
  for (std::size_t t = 0; t < rw.size(); ++t) rw[t] = ac[t] / ac[0];
  auto rw_at = [&](double t) {
    auto i = static_cast<std::size_t>(std::floor(t));
    double f = t - static_cast<double>(i);
    return rw[i] * (1.0 - f) + rw[std::min(i + 1, rw.size() - 1)] * f;
  };

  double mean = 0.0;
  for (double s : clip.samples) mean += s;
  mean /= static_cast<double>(n_samples);
  double global_peak = 0.0;
  for (double s : clip.samples) global_peak = std::max(global_peak, std::abs(s - mean));

  const std::size_t n_frames = 1 + (n_samples - win) / hop;
  F0Track track;
  track.f0_min_hz = cfg.f0_min_hz;
  track.f0_max_hz = cfg.f0_max_hz;
  track.voicing_threshold = cfg.voicing_threshold;
  track.f0_hz.assign(n_frames, std::nullopt);
  track.correlation.assign(n_frames, 0.0);
  track.frame_times.resize(n_frames);
  std::vector<double> r(lag_hi + 2);

  // Candidate lags per frame; lag 0 is the unvoiced candidate.
  struct Candidate {
    double lag = 0.0, strength = 0.0;
  };
  std::vector<std::vector<Candidate>> cands(n_frames);
  auto load_frame = [&](std::size_t k, double &peak) {
    const double *src = clip.samples.data() + k * hop;
    peak = 0.0;
    for (std::size_t i = 0; i < win; ++i) {
      double x = src[i] - mean;
      peak = std::max(peak, std::abs(x));
      buf[i] = x * window[i];
    }
    fft.power_spectrum(buf, power);
  };

  for (std::size_t k = 0; k < n_frames; ++k) {
    track.frame_times[k] = (static_cast<double>(k * hop) + 0.5 * win) / fs;
    double peak = 0.0;
    load_frame(k, peak);
    const double rel = global_peak > 0.0 ? peak / global_peak : 0.0;
    cands[k].push_back(
        {0.0, cfg.voicing_threshold +
                  std::max(0.0, 2.0 - rel / (cfg.silence_threshold / (1.0 + cfg.voicing_threshold)))});
    if (peak <= 0.0 || rel < cfg.silence_threshold) continue;
    fft.inverse_real(power, ac);
    const double r0 = ac[0];
    if (!(r0 > 0.0)) continue;
    for (std::size_t t = lag_lo - 1; t <= lag_hi + 1; ++t) r[t] = ac[t] / r0 / rw[t];
    std::vector<Candidate> voiced;
    for (std::size_t t = lag_lo; t <= lag_hi; ++t) {
      if (!(r[t] > 0.5 * cfg.voicing_threshold && r[t] >= r[t - 1] && r[t] > r[t + 1])) continue;
      double denom = r[t - 1] - 2.0 * r[t] + r[t + 1];
      double delta = denom < 0.0 ? 0.5 * (r[t - 1] - r[t + 1]) / denom : 0.0;
      double lag = std::clamp(static_cast<double>(t) + delta, tau_min, tau_max);
      double height = r[t] - 0.25 * (r[t - 1] - r[t + 1]) * delta;
      voiced.push_back({lag, height - cfg.octave_cost * std::log2(cfg.f0_min_hz * lag / fs)});
    }
    std::stable_sort(voiced.begin(), voiced.end(),
                     [](const Candidate &a, const Candidate &b) { return a.strength > b.strength; });
    if (voiced.size() > static_cast<std::size_t>(cfg.max_candidates))
      voiced.resize(static_cast<std::size_t>(cfg.max_candidates));
    cands[k].insert(cands[k].end(), voiced.begin(), voiced.end());
  }

  // Viterbi search for the path of highest total strength minus transition
  // costs (voicing changes and octave jumps).
  const double step_corr = 0.01 / (static_cast<double>(hop) / fs);
  auto transition = [&](const Candidate &a, const Candidate &b) {
    const bool va = a.lag > 0.0, vb = b.lag > 0.0;
    if (!va && !vb) return 0.0;
    if (va != vb) return cfg.voiced_unvoiced_cost * step_corr;
    return cfg.octave_jump_cost * std::abs(std::log2(a.lag / b.lag)) * step_corr;
  };
  std::vector<std::vector<double>> score(n_frames);
  std::vector<std::vector<std::size_t>> back(n_frames);
  for (std::size_t k = 0; k < n_frames; ++k) {
    score[k].resize(cands[k].size());
    back[k].assign(cands[k].size(), 0);
    for (std::size_t j = 0; j < cands[k].size(); ++j) {
      double best = k == 0 ? 0.0 : -1e300;
      if (k > 0) {
        for (std::size_t i = 0; i < cands[k - 1].size(); ++i) {
          double v = score[k - 1][i] - transition(cands[k - 1][i], cands[k][j]);
          if (v > best) {
            best = v;
            back[k][j] = i;
          }
        }
      }
      score[k][j] = best + cands[k][j].strength;
    }
  }
  std::vector<std::size_t> path(n_frames, 0);
  if (n_frames > 0) {
    const auto &last = score[n_frames - 1];
    path[n_frames - 1] =
        static_cast<std::size_t>(std::max_element(last.begin(), last.end()) - last.begin());
    for (std::size_t k = n_frames - 1; k > 0; --k) path[k - 1] = back[k][path[k]];
  }

  // Refine the chosen lags by maximizing the band-limited autocorrelation.
  for (std::size_t k = 0; k < n_frames; ++k) {
    const double cand_lag = cands[k][path[k]].lag;
    if (cand_lag <= 0.0) continue;
    double peak = 0.0;
    load_frame(k, peak);
    const double r0 = bandlimited_autocorr(power, nfft, 0.0);
    auto neg_corr = [&](double t) { return -bandlimited_autocorr(power, nfft, t) / r0 / rw_at(t); };
    double lo = std::max(tau_min, cand_lag - 1.0);
    double hi = std::min(tau_max, cand_lag + 1.0);
    auto [lag, neg] = boost::math::tools::brent_find_minima(neg_corr, lo, hi, 40);
    double corr = -neg;
    track.correlation[k] = corr;
    if (corr >= cfg.voicing_threshold) track.f0_hz[k] = fs / lag;
  }
  return track;
}

F0Stats f0_statistics(const F0Track &track) {
  std::vector<double> f, t;
  for (std::size_t i = 0; i < track.f0_hz.size(); ++i) {
    if (track.f0_hz[i]) {
      f.push_back(*track.f0_hz[i]);
      t.push_back(track.frame_times[i]);
    }
  }
  F0Stats s;
  if (f.size() < 2) {
    s.fallback = true;
    return s;
  }
  s.mean = mean_of(f);
  s.sd = sample_sd(f);
  s.max = *std::max_element(f.begin(), f.end());
  s.min = *std::min_element(f.begin(), f.end());
  double tm = mean_of(t), sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    sxy += (t[i] - tm) * (f[i] - s.mean);
    sxx += (t[i] - tm) * (t[i] - tm);
  }
  s.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return s;
}

ScalarMeasure harmonic_to_noise_ratio(const F0Track &track) {
  std::vector<double> db;
  for (std::size_t i = 0; i < track.f0_hz.size(); ++i) {
    if (!track.f0_hz[i]) continue;
    double r = std::clamp(track.correlation[i], 1e-9, 1.0 - 1e-9);
    db.push_back(10.0 * std::log10(r / (1.0 - r)));
  }
  if (db.empty()) return {0.0, true};
  return {mean_of(db), false};
}

ScalarMeasure harmonic_to_noise_ratio(const AudioClip &clip,
                                      const MeasureConfig &cfg) {
  return harmonic_to_noise_ratio(estimate_f0_contour(clip, cfg));
}

CepstralAnalysis cepstral_analysis(const AudioClip &clip, const MeasureConfig &cfg) {
  cfg.validate();
  clip.validate();
  const int fs = clip.sample_rate_hz;
  const std::size_t len = samples_for_ms(cfg.cpp_frame_ms, fs);
  const std::size_t hop = std::max<std::size_t>(1, samples_for_ms(cfg.hop_ms, fs));
  const std::size_t nfft = next_pow2(len);
  if (clip.samples.size() < len)
    throw DataError("clip '" + clip.source_id + "' is shorter than one CPP frame");
  const int half_q = cfg.cpp_quef_smooth / 2;
  const auto q_lo = static_cast<std::size_t>(std::ceil(fs / cfg.f0_max_hz));
  const auto q_hi = static_cast<std::size_t>(std::floor(fs / cfg.f0_min_hz));
  if (q_lo < static_cast<std::size_t>(half_q) + 1 || q_hi + half_q >= nfft / 2 ||
      q_hi <= q_lo + 1)
    throw UsageError("CPP quefrency range does not fit the analysis frame");
  const std::size_t q_begin = q_lo - half_q, q_end = q_hi + half_q + 1;
  const std::size_t span = q_end - q_begin;
  const std::size_t lh_bin = static_cast<std::size_t>(cfg.lh_cutoff_hz * nfft / fs);

  const std::vector<double> window = hamming_window(len);
  double mean = 0.0;
  for (double s : clip.samples) mean += s;
  mean /= static_cast<double>(clip.samples.size());

  RealFft fft(nfft);
  std::vector<double> buf(len), power(fft.bins()), logspec(fft.bins()), ceps(nfft);
  const std::size_t n_frames = 1 + (clip.samples.size() - len) / hop;
  Eigen::MatrixXd cpow(static_cast<Eigen::Index>(n_frames), static_cast<Eigen::Index>(span));
  std::vector<double> lh;
  for (std::size_t k = 0; k < n_frames; ++k) {
    const double *src = clip.samples.data() + k * hop;
    for (std::size_t i = 0; i < len; ++i) buf[i] = (src[i] - mean) * window[i];
    fft.power_spectrum(buf, power);
    double pmax = *std::max_element(power.begin(), power.end());
    if (!(pmax > 0.0)) {
      cpow.row(static_cast<Eigen::Index>(k)).setZero();
      continue;
    }
    const double floor = 1e-10 * pmax;
    for (std::size_t b = 0; b < power.size(); ++b)
      logspec[b] = 10.0 * std::log10(std::max(power[b], floor));
    fft.inverse_real(logspec, ceps);
    for (std::size_t q = 0; q < span; ++q)
      cpow(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(q)) =
          ceps[q_begin + q] * ceps[q_begin + q];
    double low = 0.0, high = 0.0;
    for (std::size_t b = 1; b < power.size(); ++b) (b < lh_bin ? low : high) += power[b];
    if (low > 0.0 && high > 0.0) lh.push_back(10.0 * std::log10(low / high));
  }

  // Moving averages of cepstral power over time, then over quefrency.
  const int before = (cfg.cpp_time_smooth - 1) / 2;
  const int after = cfg.cpp_time_smooth - 1 - before;
  Eigen::MatrixXd tsm(cpow.rows(), cpow.cols());
  for (Eigen::Index k = 0; k < cpow.rows(); ++k) {
    Eigen::Index a = std::max<Eigen::Index>(0, k - before);
    Eigen::Index b = std::min<Eigen::Index>(cpow.rows() - 1, k + after);
    tsm.row(k) = cpow.middleRows(a, b - a + 1).colwise().mean();
  }

  CepstralAnalysis out;
  std::vector<double> peaks;
  const std::size_t nq = q_hi - q_lo + 1;
  std::vector<double> qs(nq), cdb(nq);
  for (std::size_t i = 0; i < nq; ++i)
    qs[i] = static_cast<double>(q_lo + i) / fs;
  const double qm = mean_of(qs);
  double sxx = 0.0;
  for (double q : qs) sxx += (q - qm) * (q - qm);
  for (Eigen::Index k = 0; k < tsm.rows(); ++k) {
    for (std::size_t i = 0; i < nq; ++i) {
      std::size_t c = q_lo + i - q_begin;
      double acc = 0.0;
      for (int d = -half_q; d <= half_q; ++d)
        acc += tsm(k, static_cast<Eigen::Index>(c + d));
      cdb[i] = 10.0 * std::log10(acc / (2 * half_q + 1) + 1e-30);
    }
    double cm = mean_of(cdb), sxy = 0.0;
    for (std::size_t i = 0; i < nq; ++i) sxy += (qs[i] - qm) * (cdb[i] - cm);
    double slope = sxy / sxx, icpt = cm - slope * qm;
    std::size_t ip = static_cast<std::size_t>(
        std::max_element(cdb.begin(), cdb.end()) - cdb.begin());
    out.frame_cpp.push_back(cdb[ip] - (icpt + slope * qs[ip]));
    peaks.push_back(qs[ip]);
  }
  out.cpp = mean_of(out.frame_cpp);
  out.cpp_sd = sample_sd(out.frame_cpp);
  std::nth_element(peaks.begin(), peaks.begin() + peaks.size() / 2, peaks.end());
  out.peak_quefrency_s = peaks[peaks.size() / 2];
  out.lh_ratio_db = mean_of(lh);
  out.lh_ratio_sd = sample_sd(lh);
  return out;
}

double cepstral_peak_prominence(const AudioClip &clip, const MeasureConfig &cfg) {
  return cepstral_analysis(clip, cfg).cpp;
}

namespace {

double hz_to_erb(double hz) { return 21.4 * std::log10(1.0 + hz / 229.0); }
double erb_to_hz(double erb) { return (std::pow(10.0, erb / 21.4) - 1.0) * 229.0; }

std::vector<int> primes_up_to(int n) {
  std::vector<bool> composite(std::max(n + 1, 2), false);
  std::vector<int> out;
  for (int i = 2; i <= n; ++i) {
    if (composite[i]) continue;
    out.push_back(i);
    for (long j = static_cast<long>(i) * i; j <= n; j += i) composite[j] = true;
  }
  return out;
}

}  // namespace

double pitch_strength(const AudioClip &clip, const MeasureConfig &cfg) {
  cfg.validate();
  clip.validate();
  const int fs = clip.sample_rate_hz;
  const std::size_t win = next_pow2(samples_for_ms(4000.0 / cfg.f0_min_hz, fs));
  const std::size_t hop = std::max<std::size_t>(1, samples_for_ms(cfg.ps_hop_ms, fs));
  if (clip.samples.size() < win)
    throw DataError("clip '" + clip.source_id + "' is too short for pitch strength");

  const double nyquist = fs / 2.0;
  std::vector<double> freqs;
  for (double e = hz_to_erb(cfg.f0_min_hz / 4.0); e <= hz_to_erb(nyquist); e += cfg.ps_erb_step)
    freqs.push_back(erb_to_hz(e));
  std::vector<double> cands;
  for (double o = 0.0; cfg.f0_min_hz * std::exp2(o) <= cfg.f0_max_hz + 1e-9;
       o += cfg.ps_candidate_step_oct)
    cands.push_back(cfg.f0_min_hz * std::exp2(o));

  const auto nf = static_cast<Eigen::Index>(freqs.size());
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cands.size()), nf);
  std::vector<int> harmonics{1};
  for (int p : primes_up_to(static_cast<int>(nyquist / cfg.f0_min_hz) + 1)) harmonics.push_back(p);
  for (std::size_t c = 0; c < cands.size(); ++c) {
    const double pc = cands[c];
    const int n_harm = static_cast<int>(freqs.back() / pc - 0.75);
    Eigen::VectorXd k = Eigen::VectorXd::Zero(nf);
    for (int h : harmonics) {
      if (h > n_harm) break;
      for (Eigen::Index j = 0; j < nf; ++j) {
        double q = freqs[j] / pc, a = std::abs(q - h);
        if (a < 0.25)
          k(j) = std::cos(2.0 * std::numbers::pi * q);
        else if (a > 0.25 && a < 0.75)
          k(j) += std::cos(2.0 * std::numbers::pi * q) / 2.0;
      }
    }
    for (Eigen::Index j = 0; j < nf; ++j) k(j) *= std::sqrt(1.0 / freqs[j]);
    double pos = k.cwiseMax(0.0).norm();
    if (pos > 0.0) kernel.row(static_cast<Eigen::Index>(c)) = (k / pos).transpose();
  }

  const std::vector<double> window = hann(win);
  double mean = 0.0;
  for (double s : clip.samples) mean += s;
  mean /= static_cast<double>(clip.samples.size());
  RealFft fft(win);
  std::vector<double> buf(win), power(fft.bins());
  Eigen::VectorXd loud(nf);
  const std::size_t n_frames = 1 + (clip.samples.size() - win) / hop;
  double total = 0.0;
  for (std::size_t k = 0; k < n_frames; ++k) {
    const double *src = clip.samples.data() + k * hop;
    for (std::size_t i = 0; i < win; ++i) buf[i] = (src[i] - mean) * window[i];
    fft.power_spectrum(buf, power);
    for (Eigen::Index j = 0; j < nf; ++j) {
      double pos = freqs[j] * static_cast<double>(win) / fs;
      auto b = static_cast<std::size_t>(pos);
      double frac = pos - static_cast<double>(b);
      std::size_t b1 = std::min(b + 1, power.size() - 1);
      double mag = std::sqrt(power[b]) * (1.0 - frac) + std::sqrt(power[b1]) * frac;
      loud(j) = std::sqrt(std::max(mag, 0.0));
    }
    double norm = loud.norm();
    if (!(norm > 0.0)) continue;
    total += (kernel * (loud / norm)).maxCoeff();
  }
  return total / static_cast<double>(n_frames);
}

CsidCoefficients CsidCoefficients::load(const std::filesystem::path &path) {
  Config cfg = Config::load(path, /*apply_env=*/false);
  CsidCoefficients c;
  for (const auto &[key, value] : cfg.entries()) {
    double v = cfg.get_double(key);
    if (!std::isfinite(v)) throw UsageError("non-finite CSID coefficient: " + key);
    if (key == "intercept")
      c.intercept = v;
    else
      c.weights[key] = v;
  }
  return c;
}

CsidCoefficients CsidCoefficients::placeholder_defaults() {
  // Placeholder weights; see config/csid_placeholder.cfg.
  CsidCoefficients c;
  c.intercept = 100.0;
  c.weights = {{"CPP", -5.0}, {"CPP_SD", -1.0}, {"LH_RATIO", -0.5},
               {"LH_RATIO_SD", -1.0}};
  return c;
}

double csid(const std::map<std::string, double> &measures,
            const CsidCoefficients &coeffs) {
  double value = coeffs.intercept;
  for (const auto &[term, weight] : coeffs.weights) {
    auto it = measures.find(term);
    if (it == measures.end())
      throw UsageError("CSID coefficient names unknown term '" + term + "'");
    value += weight * it->second;
  }
  return value;
}

const std::array<std::string, BaselineFeatureVector::kDim> &
BaselineFeatureVector::names() {
  static const std::array<std::string, kDim> kNames = {
      "mfcc_0", "mfcc_1", "mfcc_2",  "mfcc_3",  "mfcc_4",  "mfcc_5",
      "mfcc_6", "mfcc_7", "mfcc_8",  "mfcc_9",  "mfcc_10", "mfcc_11",
      "mfcc_12", "ps",    "cpp",     "csid",    "hnr",     "f0_mean",
      "f0_sd",  "f0_max", "f0_min",  "f0_slope"};
  return kNames;
}

BaselineFeatureVector baseline_feature_vector(const AudioClip &clip,
                                              const MeasureConfig &cfg,
                                              const CsidCoefficients &coeffs) {
  cfg.validate();
  clip.validate();
  if (cfg.mfcc.n_mfcc != 13)
    throw UsageError("the baseline vector expects 13 MFCCs");
  BaselineFeatureVector out;
  auto &v = out.values;
  try {
    FeatureMatrix mfcc = compute_mfcc(clip, cfg.mfcc);
    Eigen::RowVectorXd m = mfcc.values.colwise().mean();
    for (int j = 0; j < 13; ++j) v[j] = m(j);
  } catch (const DataError &) {
    out.warnings |= kWarnSilent;
  }

  F0Stats f0;
  ScalarMeasure hnr{0.0, true};
  try {
    F0Track track = estimate_f0_contour(clip, cfg);
    f0 = f0_statistics(track);
    hnr = harmonic_to_noise_ratio(track);
  } catch (const DataError &) {
    f0.fallback = true;
  }
  if (f0.fallback) out.warnings |= kWarnF0Fallback;
  if (hnr.fallback) out.warnings |= kWarnHnrFallback;

  CepstralAnalysis cep;
  try {
    cep = cepstral_analysis(clip, cfg);
  } catch (const DataError &) {
    out.warnings |= kWarnCepstrumFallback;
  }
  double ps = 0.0;
  try {
    ps = pitch_strength(clip, cfg);
  } catch (const DataError &) {
    out.warnings |= kWarnSilent;
  }

  std::map<std::string, double> terms = {
      {"CPP", cep.cpp},           {"CPP_SD", cep.cpp_sd},
      {"LH_RATIO", cep.lh_ratio_db}, {"LH_RATIO_SD", cep.lh_ratio_sd},
      {"HNR", hnr.value},          {"PS", ps},
      {"F0_MEAN", f0.mean},        {"F0_SD", f0.sd},
      {"F0_MAX", f0.max},          {"F0_MIN", f0.min},
      {"F0_SLOPE", f0.slope}};
  v[13] = ps;
  v[14] = cep.cpp;
  v[15] = csid(terms, coeffs);
  v[16] = hnr.value;
  v[17] = f0.mean;
  v[18] = f0.sd;
  v[19] = f0.max;
  v[20] = f0.min;
  v[21] = f0.slope;
  for (double &x : v)
    if (!std::isfinite(x)) {
      x = 0.0;
      out.warnings |= kWarnSilent;
    }
  return out;
}

void write_baseline_csv(
    const std::filesystem::path &path,
    const std::vector<std::pair<std::string, BaselineFeatureVector>> &rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "clip_id";
  for (const auto &n : BaselineFeatureVector::names()) out << ',' << n;
  out << ",warnings\n";
  char num[32];
  for (const auto &[id, vec] : rows) {
    out << id;
    for (double x : vec.values) {
      std::snprintf(num, sizeof num, "%.17g", x);
      out << ',' << num;
    }
    out << ',' << vec.warnings << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<std::pair<std::string, BaselineFeatureVector>> read_baseline_csv(
    const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing artifact: " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<std::string, BaselineFeatureVector>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell, id;
    std::getline(ss, id, ',');
    BaselineFeatureVector vec;
    for (std::size_t j = 0; j < BaselineFeatureVector::kDim; ++j) {
      if (!std::getline(ss, cell, ','))
        throw DataError("short row in " + path.string());
      vec.values[j] = std::stod(cell);
    }
    if (!std::getline(ss, cell, ',')) throw DataError("short row in " + path.string());
    vec.warnings = static_cast<unsigned>(std::stoul(cell));
    rows.emplace_back(id, vec);
  }
  return rows;
}

}  // namespace vqid
