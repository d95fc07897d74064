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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../test_util.h"
#include "vqid/error.h"
#include "vqid/experiment.h"
#include "vqid/features.h"
#include "vqid/gmm.h"
#include "vqid/ivector.h"
#include "vqid/lda.h"
#include "vqid/log.h"
#include "vqid/measures.h"
#include "vqid/plda.h"
#include "vqid/svm.h"

using namespace vqid;

namespace {

// Collects failed checks of one criterion.
class Checker {
 public:
  void check(bool ok, const std::string &what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string &text) { notes_.push_back(text); }
  bool ok() const { return failures_.empty(); }
  std::string summary() const {
    std::string s;
    for (const auto &f : failures_) s += (s.empty() ? "" : "; ") + f;
    for (const auto &n : notes_) s += (s.empty() ? "" : "; ") + n;
    return s;
  }

 private:
  std::vector<std::string> failures_, notes_;
};

std::string fmt(const char *f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- 1: DSP

void criterion_dsp(Checker &c) {
  MeasureConfig mc;
  {
    F0Track t = estimate_f0_contour(test::sine(200.0, 1.0), mc);
    F0Stats s = f0_statistics(t);
    c.check(!s.fallback && std::abs(s.mean - 200.0) <= 2.0, "sine F0 " + fmt("%.3f", s.mean));
    c.note("sine F0 " + fmt("%.3f Hz", s.mean));
  }
  {
    F0Stats s = f0_statistics(estimate_f0_contour(test::chirp(100.0, 200.0, 1.0), mc));
    c.check(std::abs(s.slope - 100.0) <= 5.0, "chirp slope " + fmt("%.3f", s.slope));
    c.note("chirp slope " + fmt("%.2f Hz/s", s.slope));
  }
  {
    AudioClip mix = test::mix_at_snr(test::pulse_train(200.0, 1.0), test::noise(1.0, 5), 10.0);
    const double h = harmonic_to_noise_ratio(mix, mc).value;
    c.check(std::abs(h - 10.0) <= 1.5, "HNR " + fmt("%.3f", h));
    c.note("HNR@10dB " + fmt("%.2f dB", h));
  }
  {
    const double d = cepstral_peak_prominence(test::pulse_train(150.0, 1.0), mc) -
                     cepstral_peak_prominence(test::noise(1.0, 1), mc);
    c.check(d >= 5.0, "CPP gap " + fmt("%.3f", d));
    c.note("CPP gap " + fmt("%.2f dB", d));
  }
  {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(3.0, 5.0);
    FeatureMatrix f;
    f.values.resize(500, 39);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values(i) = g(rng);
    FeatureMatrix n = cmvn(f);
    const double mean = n.values.colwise().mean().cwiseAbs().maxCoeff();
    const double var =
        (n.values.array().square().colwise().mean() - 1.0).abs().maxCoeff();
    c.check(mean < 1e-10 && var < 1e-8, "CMVN");
  }
  {
    MfccConfig cfg;
    bool exact = true;
    for (std::size_t n : {1103u, 1104u, 1544u, 44100u, 88200u, 123457u}) {
      AudioClip clip = test::noise(static_cast<double>(n) / 44100.0, n);
      clip.samples.resize(n);
      std::size_t expect = 1 + (n - 1103) / 441;
      exact = exact && compute_mfcc(clip, cfg).rows() == static_cast<Eigen::Index>(expect);
    }
    c.check(exact, "MFCC frame count");
  }
  {
    CsidCoefficients co = CsidCoefficients::placeholder_defaults();
    AudioClip silence;
    silence.samples.assign(22050, 0.0);
    bool all22 = true;
    for (const AudioClip &clip : {test::sine(180.0, 0.5), test::noise(0.5, 2), silence})
      all22 = all22 && baseline_feature_vector(clip, mc, co).values.size() == 22;
    c.check(all22, "baseline dimension");
  }
}

// ---------------------------------------------------------------- 2: GMM

Eigen::MatrixXd mixture_data(int n, int f, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd centers(k, f);
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers(i) = 3.0 * g(rng);
  Eigen::MatrixXd x(n, f);
  for (int t = 0; t < n; ++t) {
    const int cc = static_cast<int>(rng() % k);
    for (int j = 0; j < f; ++j) x(t, j) = centers(cc, j) + (0.5 + 0.3 * cc) * g(rng);
  }
  return x;
}

void criterion_gmm(Checker &c) {
  {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.5, 2.0), m(-2.0, 2.0);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const int cc = 5, f = 3;
      Eigen::VectorXd w(cc);
      Eigen::MatrixXd mu(cc, f), var(cc, f);
      for (int i = 0; i < cc; ++i) {
        w(i) = u(rng);
        for (int j = 0; j < f; ++j) {
          mu(i, j) = m(rng);
          var(i, j) = u(rng);
        }
      }
      w /= w.sum();
      DiagonalGmm gmm(w, mu, var);
      for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd x(f);
        for (auto &v : x) v = g(rng);
        Eigen::VectorXd dens(cc);
        for (int i = 0; i < cc; ++i) {
          double p = w(i);
          for (int j = 0; j < f; ++j)
            p *= std::exp(-0.5 * (x(j) - mu(i, j)) * (x(j) - mu(i, j)) / var(i, j)) /
                 std::sqrt(2.0 * std::numbers::pi * var(i, j));
          dens(i) = p;
        }
        worst = std::max(worst, (frame_posteriors(gmm, x) - dens / dens.sum()).cwiseAbs().maxCoeff());
      }
    }
    c.check(worst <= 1e-10, "posterior error " + fmt("%.3g", worst));
  }
  {
    bool mono = true;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      UbmTrainConfig cfg;
      cfg.components = 8;
      cfg.em_iters = 20;
      cfg.tol = 0.0;
      cfg.seed = seed;
      UbmTrainResult r = train_ubm(mixture_data(3000, 4, 6, 10 + seed), cfg);
      for (std::size_t i = 1; i < r.avg_log_likelihood.size(); ++i) {
        const double prev = r.avg_log_likelihood[i - 1];
        mono = mono && r.avg_log_likelihood[i] >= prev - 1e-8 * std::abs(prev);
      }
    }
    c.check(mono, "EM monotonicity");
  }
  {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(4000, 1);
    for (int i = 0; i < 2000; ++i) {
      x(i, 0) = -10.0 + g(rng);
      x(2000 + i, 0) = 10.0 + g(rng);
    }
    UbmTrainConfig cfg;
    cfg.components = 2;
    cfg.seed = 3;
    UbmTrainResult r = train_ubm(x, cfg);
    const double lo = r.gmm.means().col(0).minCoeff(), hi = r.gmm.means().col(0).maxCoeff();
    c.check(std::abs(lo + 10.0) <= 0.1 && std::abs(hi - 10.0) <= 0.1, "two-cluster means");
  }
  {
    UbmTrainConfig cfg;
    cfg.components = 6;
    cfg.em_iters = 3;
    DiagonalGmm gmm = train_ubm(mixture_data(2000, 3, 4, 20), cfg).gmm;
    Eigen::MatrixXd a = mixture_data(300, 3, 2, 1), b = mixture_data(200, 3, 2, 2), ab(500, 3);
    ab << a, b;
    SufficientStats sa = accumulate_stats(gmm, a);
    sa += accumulate_stats(gmm, b);
    SufficientStats sab = accumulate_stats(gmm, ab);
    const double err = std::max((sa.zeroth - sab.zeroth).cwiseAbs().maxCoeff(),
                                (sa.first - sab.first).cwiseAbs().maxCoeff());
    c.check(err <= 1e-9, "stats additivity " + fmt("%.3g", err));
  }
}

// ---------------------------------------------------------------- 3: i-vector

Eigen::MatrixXd gaussian_matrix(Eigen::Index r, Eigen::Index cols, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  Eigen::MatrixXd m(r, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
  return m;
}

std::shared_ptr<const DiagonalGmm> unit_ubm(int cc, int f, double spread, std::uint64_t seed) {
  return std::make_shared<const DiagonalGmm>(Eigen::VectorXd::Constant(cc, 1.0 / cc),
                                             gaussian_matrix(cc, f, seed, spread),
                                             Eigen::MatrixXd::Ones(cc, f));
}

double max_principal_angle_deg(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
  Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                       Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() *
                       Eigen::MatrixXd::Identity(b.rows(), b.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(qa.transpose() * qb);
  return std::acos(std::min(1.0, svd.singularValues().minCoeff())) * 180.0 / std::numbers::pi;
}

void criterion_ivector(Checker &c) {
  {
    auto ubm = unit_ubm(4, 3, 2.0, 1);
    TotalVariabilityModel tv(ubm, Eigen::MatrixXd::Zero(12, 5));
    SufficientStats s = accumulate_stats(*ubm, gaussian_matrix(100, 3, 2));
    c.check(extract_ivector(s, tv).w == Eigen::VectorXd::Zero(5), "T=0 gives w=0");
  }
  {
    auto ubm = std::make_shared<const DiagonalGmm>(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 1),
                                                   Eigen::MatrixXd::Ones(1, 1));
    const double t = 0.7, n = 12.0, f = 3.5;
    TotalVariabilityModel tv(ubm, Eigen::MatrixXd::Constant(1, 1, t));
    SufficientStats s;
    s.zeroth = Eigen::VectorXd::Constant(1, n);
    s.first = Eigen::MatrixXd::Constant(1, 1, f);
    s.frames = n;
    s.ubm_fingerprint = ubm->fingerprint();
    const double w = extract_ivector(s, tv).w(0);
    auto logpost = [&](double x) { return -0.5 * x * x + t * x * f - 0.5 * n * t * t * x * x; };
    double a = -100.0, b = 100.0;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
      double x1 = b - r * (b - a), x2 = a + r * (b - a);
      if (logpost(x1) > logpost(x2)) b = x2;
      else a = x1;
    }
    c.check(std::abs(w - 0.5 * (a + b)) <= 1e-6 && std::abs(w - t * f / (1.0 + n * t * t)) <= 1e-12,
            "scalar closed form");
  }
  {
    auto ubm = unit_ubm(4, 3, 12.0, 11);
    Eigen::MatrixXd t_star = gaussian_matrix(12, 2, 12);
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g;
    std::vector<SufficientStats> stats;
    for (int u = 0; u < 300; ++u) {
      Eigen::Vector2d w(g(rng), g(rng));
      Eigen::VectorXd shift = t_star * w;
      Eigen::MatrixXd x(200, 3);
      for (int i = 0; i < 200; ++i) {
        const auto cc = static_cast<Eigen::Index>(rng() % 4);
        for (int j = 0; j < 3; ++j) x(i, j) = ubm->means()(cc, j) + shift(cc * 3 + j) + g(rng);
      }
      stats.push_back(accumulate_stats(*ubm, x));
    }
    TvTrainConfig cfg;
    cfg.ivector_dim = 2;
    cfg.em_iters = 10;
    cfg.seed = 14;
    cfg.init_scale = 0.1;
    const double angle = max_principal_angle_deg(train_total_variability(stats, ubm, cfg).model.t(), t_star);
    c.check(angle < 5.0, "subspace angle " + fmt("%.3f", angle));
    c.note("subspace angle " + fmt("%.3f deg", angle));
  }
  {
    auto ubm = unit_ubm(6, 4, 2.0, 21);
    Eigen::MatrixXd t = gaussian_matrix(24, 5, 22);
    TotalVariabilityModel tv(ubm, t);
    Eigen::VectorXd w = gaussian_matrix(5, 1, 23).col(0);
    Eigen::VectorXd naive = ubm->supervector();
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index k = 0; k < t.cols(); ++k) naive(r) += t(r, k) * w(k);
    const double err = (reconstruct_supervector(tv, w) - naive).cwiseAbs().maxCoeff();
    c.check(err <= 1e-12, "reconstruction " + fmt("%.3g", err));
  }
}

// ---------------------------------------------------------------- 4: post-processing

void criterion_postproc(Checker &c) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  {
    std::vector<Eigen::VectorXd> x;
    std::vector<std::string> labels;
    for (int i = 0; i < 200; ++i) {
      const bool right = i % 2;
      x.push_back(Eigen::Vector2d((right ? 4.0 : -4.0) + g(rng), 3.0 * g(rng)));
      labels.push_back(right ? "b" : "a");
    }
    Eigen::VectorXd dir = fit_lda(x, labels, 1).projection().col(0).normalized();
    ScatterMatrices s = scatter_matrices(x, labels);
    Eigen::EigenSolver<Eigen::MatrixXd> es(s.within.inverse() * s.between);
    Eigen::Index best;
    es.eigenvalues().real().maxCoeff(&best);
    const double cosine = std::abs(dir.dot(es.eigenvectors().col(best).real().normalized()));
    c.check(cosine > 0.99, "LDA cosine " + fmt("%.6f", cosine));
  }
  {
    std::vector<Eigen::VectorXd> x;
    std::vector<std::string> labels;
    for (int k = 0; k < 65; ++k) {
      Eigen::VectorXd center = gaussian_matrix(70, 1, 100 + k, 3.0).col(0);
      for (int i = 0; i < 3; ++i) {
        Eigen::VectorXd v = center;
        for (auto &e : v) e += g(rng);
        x.push_back(v);
        labels.push_back("c" + std::to_string(k));
      }
    }
    bool accepted = false, rejected = false;
    try {
      accepted = fit_lda(x, labels, 64).output_dim() == 64;
    } catch (const Error &) {
    }
    try {
      fit_lda(x, labels, 65);
    } catch (const UsageError &) {
      rejected = true;
    }
    c.check(accepted && rejected, "rank bound");
  }
  {
    bool ok = true;
    std::normal_distribution<double> wide(0.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
      Eigen::VectorXd v(9);
      for (auto &e : v) e = wide(rng);
      Eigen::VectorXd n = length_normalize(v);
      ok = ok && std::abs(n.norm() - 1.0) <= 1e-12 &&
           (length_normalize(n) - n).cwiseAbs().maxCoeff() <= 1e-12;
    }
    c.check(ok, "length normalization");
  }
}

// ---------------------------------------------------------------- 5: classifiers

double joint_log_density(const PldaModel &m, const std::vector<Eigen::VectorXd> &xs) {
  const Eigen::Index d = m.dim(), n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd cov(n * d, n * d);
  Eigen::VectorXd diff(n * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    diff.segment(i * d, d) = xs[i] - m.mu;
    for (Eigen::Index j = 0; j < n; ++j)
      cov.block(i * d, j * d, d, d) = m.phi_b + (i == j ? m.phi_w : Eigen::MatrixXd::Zero(d, d));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  Eigen::MatrixXd l = llt.matrixL();
  return -0.5 * (static_cast<double>(n * d) * std::log(2.0 * std::numbers::pi) +
                 2.0 * l.diagonal().array().log().sum() + diff.dot(llt.solve(diff)));
}

void criterion_classifiers(Checker &c) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  {
    // Planted two-covariance data with exact empirical moments.
    const int classes = 50, per = 20;
    const Eigen::Vector2d mu(1.0, -2.0), b(3.0, 0.8), w(0.5, 1.5);
    Eigen::MatrixXd y(classes, 2), e(classes * per, 2);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = g(rng);
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = g(rng);
    for (int k = 0; k < classes; ++k) {
      auto blk = e.middleRows(k * per, per);
      Eigen::RowVectorXd m = blk.colwise().mean();
      blk.rowwise() -= m;
    }
    auto recolor = [](Eigen::MatrixXd &z, const Eigen::MatrixXd &emp, const Eigen::MatrixXd &target) {
      Eigen::MatrixXd white = Eigen::LLT<Eigen::MatrixXd>(emp).matrixL().solve(Eigen::MatrixXd::Identity(2, 2));
      Eigen::MatrixXd color = Eigen::LLT<Eigen::MatrixXd>(target).matrixL();
      z = (z * white.transpose()) * color.transpose();
    };
    recolor(e, e.transpose() * e / static_cast<double>(classes * (per - 1)), Eigen::MatrixXd(w.asDiagonal()));
    y.rowwise() -= y.colwise().mean();
    recolor(y, y.transpose() * y / static_cast<double>(classes),
            Eigen::MatrixXd(b.asDiagonal()) + Eigen::MatrixXd(w.asDiagonal()) / per);
    std::vector<Eigen::VectorXd> x;
    std::vector<std::string> labels;
    for (int k = 0; k < classes; ++k)
      for (int i = 0; i < per; ++i) {
        x.push_back(mu + y.row(k).transpose() + e.row(k * per + i).transpose());
        labels.push_back("k" + std::to_string(k));
      }
    PldaModel m = train_plda(x, labels, 100).model;
    double worst = 0.0;
    for (int j = 0; j < 2; ++j) {
      worst = std::max(worst, std::abs(m.phi_b(j, j) - b(j)) / b(j));
      worst = std::max(worst, std::abs(m.phi_w(j, j) - w(j)) / w(j));
    }
    c.check(worst <= 0.15, "PLDA recovery " + fmt("%.4f", worst));
    c.note("PLDA worst relative error " + fmt("%.2e", worst));
  }
  {
    PldaModel m;
    m.mu = Eigen::Vector2d(0.5, -1.0);
    m.phi_b = Eigen::Vector2d(4.0, 2.0).asDiagonal();
    m.phi_w = Eigen::Vector2d(0.5, 0.3).asDiagonal();
    m.phi_w(0, 1) = m.phi_w(1, 0) = 0.1;
    Eigen::MatrixXd lb = Eigen::LLT<Eigen::MatrixXd>(m.phi_b).matrixL();
    Eigen::MatrixXd lw = Eigen::LLT<Eigen::MatrixXd>(m.phi_w).matrixL();
    int agree = 0;
    for (int test = 0; test < 100; ++test) {
      std::vector<ClassEnrollment> enr;
      for (int k = 0; k < 4; ++k) {
        Eigen::VectorXd yk = m.mu + lb * Eigen::Vector2d(g(rng), g(rng));
        ClassEnrollment ce{"class" + std::to_string(k), {}};
        for (int i = 0; i < 1 + (test + k) % 4; ++i)
          ce.vectors.push_back(yk + lw * Eigen::Vector2d(g(rng), g(rng)));
        enr.push_back(ce);
      }
      Eigen::VectorXd x = enr[test % 4].vectors[0] + lw * Eigen::Vector2d(g(rng), g(rng));
      std::string best;
      double best_score = -std::numeric_limits<double>::infinity();
      for (const auto &ce : enr) {
        std::vector<Eigen::VectorXd> with = ce.vectors;
        with.push_back(x);
        const double llr = joint_log_density(m, with) - joint_log_density(m, ce.vectors);
        if (llr > best_score) {
          best_score = llr;
          best = ce.label;
        }
      }
      agree += PldaScorer(m, enr).classify(x).label == best;
    }
    c.check(agree == 100, "PLDA oracle agreement " + std::to_string(agree) + "/100");
  }
  {
    Eigen::MatrixXd x(60, 2);
    std::vector<int> y;
    for (int i = 0; i < 60; ++i) {
      const int label = i % 2 ? 1 : -1;
      x(i, 0) = label * 3.0 + 0.5 * g(rng);
      x(i, 1) = g(rng);
      y.push_back(label);
    }
    BinarySvm m = train_binary_svm(x, y, {});
    int correct = 0;
    for (int i = 0; i < 60; ++i) correct += (m.decision(x.row(i).transpose()) > 0) == (y[i] > 0);
    c.check(correct == 60, "SVM training accuracy " + std::to_string(correct) + "/60");
  }
  {
    bool ok = true;
    for (int k : {3, 5, 8}) {
      std::vector<Eigen::VectorXd> x;
      std::vector<std::string> labels;
      for (int cls = 0; cls < k; ++cls)
        for (int i = 0; i < 3; ++i) {
          const double a = 2.0 * std::numbers::pi * cls / k;
          x.push_back(Eigen::Vector2d(5 * std::cos(a) + 0.1 * g(rng), 5 * std::sin(a) + 0.1 * g(rng)));
          labels.push_back("c" + std::to_string(cls));
        }
      ok = ok && train_linear_svm(x, labels).machines.size() == static_cast<std::size_t>(k * (k - 1) / 2);
    }
    c.check(ok, "one-vs-one machine count");
  }
}

// ---------------------------------------------------------------- 6, 7: end to end

std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct EndToEnd {
  bool ran = false;
  std::string error;
  EvaluationResults results;
  double seconds_synth = 0.0, seconds_pipeline = 0.0;
  bool identical = false;
  std::vector<AuditSummary> audits;
};

EndToEnd run_end_to_end(const std::filesystem::path &root, const std::filesystem::path &config) {
  EndToEnd e;
  try {
    ScopedLogSink quiet([](LogLevel, const std::string &) {});
    std::filesystem::remove_all(root);
    auto t0 = std::chrono::steady_clock::now();
    SynthConfig sc;
    sc.seed = 1;
    sc.speakers = 4;
    sc.seconds_per_quality = 300.0;
    RecordingManifest m = synthesize_corpus(root / "corpus", sc);
    e.seconds_synth = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    PipelineConfig cfg = PipelineConfig::from_config(Config::load(config, false), config.parent_path());
    t0 = std::chrono::steady_clock::now();
    e.results = run_pipeline(m, cfg, root / "run1").results;
    e.seconds_pipeline = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run_pipeline(m, cfg, root / "run2");
    e.identical = true;
    for (const auto &entry : std::filesystem::directory_iterator(root / "run1" / "reports")) {
      const auto other = root / "run2" / "reports" / entry.path().filename();
      e.identical = e.identical && std::filesystem::exists(other) &&
                    read_file(entry.path()) == read_file(other);
    }
    e.audits.push_back(audit_run_log(root / "run1" / "run.log"));
    e.audits.push_back(audit_run_log(root / "run2" / "run.log"));
    e.ran = true;
  } catch (const std::exception &ex) {
    e.error = ex.what();
  }
  return e;
}

void criterion_end_to_end(Checker &c, const EndToEnd &e) {
  if (!e.ran) {
    c.check(false, "pipeline failed: " + e.error);
    return;
  }
  const EvaluationReport &intra = e.results.ivector_intra, &inter = e.results.ivector_inter,
                         &base = e.results.baseline_intra;
  const double total = e.seconds_synth + e.seconds_pipeline;
  c.check(total < 600.0, "runtime " + fmt("%.0f s", total));
  const double a8 = intra.average(8, "plda");
  c.check(a8 >= 90.0, "(a) intra PLDA 8s " + fmt("%.2f", a8));
  std::string summary = "intra plda";
  for (int len : intra.lengths) summary += " " + std::to_string(len) + "s=" + fmt("%.2f", intra.average(len, "plda"));
  summary += ", svm";
  for (int len : intra.lengths) summary += " " + std::to_string(len) + "s=" + fmt("%.2f", intra.average(len, "svm"));
  summary += ", baseline";
  for (int len : base.lengths) summary += " " + std::to_string(len) + "s=" + fmt("%.2f", base.average(len, "svm"));
  summary += ", inter plda";
  for (int len : inter.lengths) summary += " " + std::to_string(len) + "s=" + fmt("%.2f", inter.average(len, "plda"));
  c.note(summary);
  c.note("synth " + fmt("%.0f s", e.seconds_synth) + ", pipeline " + fmt("%.0f s", e.seconds_pipeline));
  c.check(e.results.has_baseline, "(b) baseline report missing");
  for (int len : intra.lengths)
    if (e.results.has_baseline)
      c.check(intra.average(len, "plda") >= base.average(len, "svm"),
              "(b) i-vector below baseline at " + std::to_string(len) + "s");
  for (const auto &cls : intra.classifiers) {
    std::vector<double> acc;
    for (int len : {8, 4, 2}) acc.push_back(intra.average(len, cls));
    c.check(acc[0] + 3.0 >= acc[1] && acc[1] + 3.0 >= acc[2], "(c) length monotonicity for " + cls);
    for (int len : intra.lengths)
      c.check(inter.average(len, cls) <= intra.average(len, cls),
              "(d) inter above intra for " + cls + " at " + std::to_string(len) + "s");
  }
  c.check(e.identical, "(e) reports differ between runs");
}

void criterion_audit(Checker &c, const EndToEnd &e) {
  if (!e.ran) {
    c.check(false, "no run log: " + e.error);
    return;
  }
  const std::vector<std::string> stages = {"ubm", "tv", "lda", "plda", "svm-intra", "svm-inter",
                                           "baseline-svm"};
  for (const auto &a : e.audits) {
    c.check(a.passed(stages), "audit violations=" + std::to_string(a.violations));
  }
  c.note("audit lines " + std::to_string(e.audits[0].audit_lines) + ", violations " +
         std::to_string(e.audits[0].violations));
}

}  // namespace

int main(int argc, char **argv) {
  std::filesystem::path config = VQID_SYNTHETIC_CONFIG;
  std::filesystem::path work = std::filesystem::temp_directory_path() / "vqid_acceptance";
  if (argc > 1) work = argv[1];

  struct Criterion {
    int id;
    const char *name;
    double budget_s;
    std::function<void(Checker &)> run;
  };
  EndToEnd e2e;
  std::vector<Criterion> criteria = {
      {1, "DSP oracles", 30.0, criterion_dsp},
      {2, "GMM/EM suite", 60.0, criterion_gmm},
      {3, "i-vector suite", 60.0, criterion_ivector},
      {4, "post-processing suite", 10.0, criterion_postproc},
      {5, "classifier suite", 60.0, criterion_classifiers},
      {6, "end-to-end synthetic experiment", 0.0,
       [&](Checker &c) {
         e2e = run_end_to_end(work, config);
         criterion_end_to_end(c, e2e);
       }},
      {7, "leakage audit", 0.0, [&](Checker &c) { criterion_audit(c, e2e); }},
  };
  int failed = 0;
  for (const auto &cr : criteria) {
    Checker c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception &ex) {
      c.check(false, std::string("exception: ") + ex.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s > 0.0) c.check(s < cr.budget_s, "over time budget");
    const bool ok = c.ok();
    failed += !ok;
    std::printf("%s criterion %d (%s) [%.1f s]: %s\n", ok ? "PASS" : "FAIL", cr.id, cr.name, s,
                c.summary().c_str());
    std::fflush(stdout);
  }
  return failed;
}
