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

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "test_util.h"
#include "vqid/error.h"
#include "vqid/features.h"
#include "vqid/fft.h"

using namespace vqid;

namespace {

// Naive DFT power spectrum of a real frame zero-padded to n.
std::vector<double> dft_power(const std::vector<double> &x, std::size_t n) {
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
    p[k] = std::norm(acc);
  }
  return p;
}

double mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

}  // namespace

TEST_CASE("frame geometry at 44.1 kHz") {
  FrameGeometry g = frame_geometry(44100, 25.0, 10.0);
  CHECK(g.frame_len == 1103);
  CHECK(g.hop == 441);
  CHECK(g.fft_size == 2048);
}

TEST_CASE("frame count examples") {
  CHECK(frame_count(44100, 1103, 441) == 98);
  CHECK(frame_count(1103, 1103, 441) == 1);
  CHECK(frame_count(1102, 1103, 441) == 0);
  MfccConfig cfg;
  AudioClip c = test::noise(1.0, 1);
  CHECK(frame_signal(c, cfg).rows() == 98);
  c.samples.resize(1103);
  CHECK(frame_signal(c, cfg).rows() == 1);
  c.samples.resize(1102);
  CHECK_THROWS_AS(frame_signal(c, cfg), DataError);
  CHECK_THROWS_AS(compute_mfcc(c, cfg), DataError);
}

TEST_CASE("frame count formula holds for random geometry") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t len = 1 + rng() % 500, hop = 1 + rng() % 300, n = len + rng() % 5000;
    std::size_t brute = 0;
    for (std::size_t start = 0; start + len <= n; start += hop) ++brute;
    CHECK(frame_count(n, len, hop) == brute);
  }
}

TEST_CASE("frames hold consecutive samples") {
  MfccConfig cfg;
  AudioClip c = test::noise(0.2, 9);
  Eigen::MatrixXd f = frame_signal(c, cfg);
  for (Eigen::Index k = 0; k < f.rows(); ++k)
    for (Eigen::Index i = 0; i < f.cols(); i += 97) CHECK(f(k, i) == c.samples[k * 441 + i]);
}

TEST_CASE("fft power matches naive DFT") {
  std::vector<double> x(300);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (auto &v : x) v = g(rng);
  RealFft fft(512);
  std::vector<double> p(fft.bins());
  fft.power_spectrum(x, p);
  std::vector<double> ref = dft_power(x, 512);
  for (std::size_t k = 0; k < p.size(); ++k) CHECK(p[k] == doctest::Approx(ref[k]).epsilon(1e-9));
}

TEST_CASE("mel filterbank matches an independent triangle construction") {
  const int nf = 26, fs = 44100;
  const std::size_t n = 2048;
  MelFilterbank fb = make_mel_filterbank(nf, n, fs, 0.0, 0.0);
  const double hi = mel(fs / 2.0);
  for (int m = 0; m < nf; ++m) {
    const double l = hi * m / (nf + 1), c = hi * (m + 1) / (nf + 1), r = hi * (m + 2) / (nf + 1);
    for (std::size_t k = 0; k < n / 2 + 1; ++k) {
      const double b = mel(static_cast<double>(k) * fs / n);
      const double w = std::max(0.0, std::min((b - l) / (c - l), (r - b) / (r - c)));
      CHECK(fb.weights(m, static_cast<Eigen::Index>(k)) == doctest::Approx(w).epsilon(1e-12));
    }
  }
}

TEST_CASE("1 kHz sine: filterbank energies match a DFT oracle") {
  MfccConfig cfg;
  AudioClip c = test::sine(1000.0, 0.1);
  Eigen::MatrixXd e = mel_filterbank_energies(c, cfg);
  MelFilterbank fb = make_mel_filterbank(cfg.n_mel_filters, 2048, 44100, 0.0, 0.0);

  double mean = 0.0;
  for (double v : c.samples) mean += v;
  mean /= static_cast<double>(c.samples.size());
  for (Eigen::Index k : {Eigen::Index(0), Eigen::Index(3)}) {
    std::vector<double> x(1103);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = c.samples[k * 441 + i] - mean;
    std::vector<double> y(x.size());
    y[0] = (1.0 - cfg.pre_emphasis) * x[0];
    for (std::size_t i = 1; i < x.size(); ++i) y[i] = x[i] - cfg.pre_emphasis * x[i - 1];
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] *= 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (y.size() - 1));
    std::vector<double> p = dft_power(y, 2048);
    Eigen::Map<Eigen::VectorXd> pv(p.data(), static_cast<Eigen::Index>(p.size()));
    Eigen::VectorXd ref = (fb.weights * pv).cwiseMax(cfg.energy_floor);
    for (Eigen::Index m = 0; m < ref.size(); ++m)
      CHECK(e(k, m) == doctest::Approx(ref(m)).epsilon(1e-8));
    Eigen::Index best;
    e.row(k).maxCoeff(&best);
    const double lo_edge = best == 0 ? 0.0 : fb.center_hz[best - 1];
    const double hi_edge = fb.center_hz[best + 1];
    CHECK(lo_edge < 1000.0);
    CHECK(hi_edge > 1000.0);
    // Energy concentrated in the filters overlapping 1 kHz.
    double near = 0.0;
    for (Eigen::Index m = std::max<Eigen::Index>(0, best - 1); m <= best + 1; ++m) near += e(k, m);
    CHECK(near / e.row(k).sum() > 0.95);
  }
}

TEST_CASE("all-zero clip gives floored identical rows") {
  MfccConfig cfg;
  AudioClip c;
  c.samples.assign(44100, 0.0);
  Eigen::MatrixXd e = mel_filterbank_energies(c, cfg);
  CHECK((e.array() == cfg.energy_floor).all());
  FeatureMatrix m = compute_mfcc(c, cfg);
  for (Eigen::Index r = 1; r < m.rows(); ++r) CHECK(m.values.row(r) == m.values.row(0));
}

TEST_CASE("white noise MFCCs vary in every coefficient") {
  MfccConfig cfg;
  FeatureMatrix m = compute_mfcc(test::noise(1.5, 11), cfg);
  REQUIRE(m.rows() >= 100);
  CHECK(m.cols() == 13);
  Eigen::RowVectorXd mean = m.values.colwise().mean();
  Eigen::RowVectorXd var = (m.values.rowwise() - mean).array().square().colwise().mean();
  CHECK((var.array() > 0.0).all());
}

TEST_CASE("mfcc is deterministic") {
  MfccConfig cfg;
  AudioClip c = test::noise(0.5, 2);
  CHECK(compute_mfcc(c, cfg).values == compute_mfcc(c, cfg).values);
}

TEST_CASE("amplitude scaling shifts only the energy terms") {
  MfccConfig cfg;
  cfg.energy_floor = 1e-300;
  AudioClip c = test::noise(0.5, 4);
  AudioClip s = c;
  const double k = 2.0;
  for (auto &v : s.samples) v *= k;
  FeatureMatrix a = compute_mfcc(c, cfg), b = compute_mfcc(s, cfg);
  const double shift = std::log(k * k);
  CHECK((b.values.col(0).array() - a.values.col(0).array() - shift).abs().maxCoeff() < 1e-6);
  CHECK((b.values.rightCols(12) - a.values.rightCols(12)).cwiseAbs().maxCoeff() < 1e-6);
  cfg.use_log_energy = false;
  a = compute_mfcc(c, cfg);
  b = compute_mfcc(s, cfg);
  // c0 carries sqrt(n_filters) * log(k^2) under the orthonormal DCT.
  CHECK((b.values.col(0).array() - a.values.col(0).array() - shift * std::sqrt(26.0))
            .abs()
            .maxCoeff() < 1e-6);
}

TEST_CASE("deltas of constant and ramp sequences") {
  FeatureMatrix f;
  f.values = Eigen::MatrixXd::Constant(20, 13, 2.5);
  FeatureMatrix d = append_deltas(f, 2);
  CHECK(d.cols() == 39);
  CHECK(d.values.leftCols(13) == f.values);
  CHECK(d.values.rightCols(26).cwiseAbs().maxCoeff() == 0.0);

  f.values.setZero();
  for (Eigen::Index t = 0; t < 20; ++t) f.values(t, 4) = static_cast<double>(t);
  d = append_deltas(f, 2);
  for (Eigen::Index t = 2; t < 18; ++t) CHECK(d.values(t, 13 + 4) == doctest::Approx(1.0));
  for (Eigen::Index t = 4; t < 16; ++t) CHECK(std::abs(d.values(t, 26 + 4)) < 1e-12);

  f.values.resize(4, 13);
  CHECK_THROWS_AS(append_deltas(f, 2), DataError);
}

TEST_CASE("cmvn normalizes mean and variance") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(3.0, 5.0);
  FeatureMatrix f;
  f.values.resize(300, 39);
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values(i) = g(rng);
  f.values.col(7).setConstant(4.0);
  FeatureMatrix n = cmvn(f);
  Eigen::RowVectorXd mean = n.values.colwise().mean();
  Eigen::RowVectorXd var = n.values.array().square().colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index j = 0; j < 39; ++j) {
    if (j == 7) {
      CHECK(n.values.col(j).cwiseAbs().maxCoeff() == 0.0);
    } else {
      CHECK(std::abs(var(j) - 1.0) < 1e-8);
    }
  }
  FeatureMatrix again = cmvn(n);
  CHECK((again.values - n.values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("voice features are 39-dimensional") {
  MfccConfig cfg;
  FeatureMatrix f = compute_voice_features(test::noise(1.0, 3), cfg);
  CHECK(f.cols() == 39);
  CHECK(f.rows() == 98);
}

TEST_CASE("spectrogram of a sine, silence and a chirp") {
  SpectrogramConfig cfg;
  Spectrogram s = spectrogram(test::sine(1000.0, 0.3), cfg);
  const auto target = static_cast<Eigen::Index>(std::lround(1000.0 / s.bin_hz));
  for (Eigen::Index k = 0; k < s.magnitude.rows(); ++k) {
    Eigen::Index best;
    s.magnitude.row(k).maxCoeff(&best);
    CHECK(std::abs(best - target) <= 1);
  }
  AudioClip z;
  z.samples.assign(22050, 0.0);
  Spectrogram sz = spectrogram(z, cfg);
  CHECK((sz.magnitude.array() == cfg.floor).all());

  Spectrogram sc = spectrogram(test::chirp(500.0, 4000.0, 1.0), cfg);
  Eigen::Index prev = -1;
  for (Eigen::Index k = 0; k < sc.magnitude.rows(); ++k) {
    Eigen::Index best;
    sc.magnitude.row(k).maxCoeff(&best);
    CHECK(best >= prev);
    prev = best;
  }
}

TEST_CASE("feature cache round trip") {
  auto dir = test::temp_dir("cache");
  FeatureMatrix f = compute_voice_features(test::noise(0.5, 6), MfccConfig{});
  write_feature_cache(dir / "a.vqft", f);
  FeatureMatrix g = read_feature_cache(dir / "a.vqft");
  CHECK(g.values == f.values);
  CHECK(g.hop_ms == f.hop_ms);
  std::filesystem::resize_file(dir / "a.vqft", 40);
  CHECK_THROWS_AS(read_feature_cache(dir / "a.vqft"), DataError);
}
