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
#include <numbers>
#include <random>

#include "test_util.h"
#include "vqid/error.h"
#include "vqid/gmm.h"

using namespace vqid;

namespace {

// Direct density of a diagonal Gaussian, no logs.
double gauss(const Eigen::VectorXd &x, const Eigen::VectorXd &m, const Eigen::VectorXd &v) {
  double p = 1.0;
  for (Eigen::Index d = 0; d < x.size(); ++d)
    p *= std::exp(-0.5 * (x(d) - m(d)) * (x(d) - m(d)) / v(d)) /
         std::sqrt(2.0 * std::numbers::pi * v(d));
  return p;
}

DiagonalGmm random_gmm(int c, int f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 2.0), m(-2.0, 2.0);
  Eigen::VectorXd w(c);
  Eigen::MatrixXd mu(c, f), var(c, f);
  for (int i = 0; i < c; ++i) {
    w(i) = u(rng);
    for (int j = 0; j < f; ++j) {
      mu(i, j) = m(rng);
      var(i, j) = u(rng);
    }
  }
  w /= w.sum();
  return DiagonalGmm(w, mu, var);
}

Eigen::MatrixXd two_clusters(int n_per, std::uint64_t seed, double sep = 10.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(2 * n_per, 1);
  for (int i = 0; i < n_per; ++i) {
    x(i, 0) = -sep + g(rng);
    x(n_per + i, 0) = sep + g(rng);
  }
  return x;
}

Eigen::MatrixXd mixture_data(int n, int f, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd centers(k, f);
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers(i) = 3.0 * g(rng);
  Eigen::MatrixXd x(n, f);
  for (int t = 0; t < n; ++t) {
    const int c = static_cast<int>(rng() % k);
    for (int j = 0; j < f; ++j) x(t, j) = centers(c, j) + (0.5 + 0.3 * c) * g(rng);
  }
  return x;
}

}  // namespace

TEST_CASE("constructor validation") {
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3), v = Eigen::MatrixXd::Ones(2, 3);
  CHECK_NOTHROW(DiagonalGmm(w, m, v));
  Eigen::VectorXd bad = w;
  bad(0) = 0.6;
  CHECK_THROWS_AS(DiagonalGmm(bad, m, v), UsageError);
  v(1, 2) = 0.0;
  CHECK_THROWS_AS(DiagonalGmm(w, m, v), UsageError);
}

TEST_CASE("posteriors: single component and symmetric pair") {
  Eigen::VectorXd w1(1);
  w1 << 1.0;
  DiagonalGmm one(w1, Eigen::MatrixXd::Constant(1, 2, 3.0), Eigen::MatrixXd::Ones(1, 2));
  Eigen::VectorXd x(2);
  x << -4.0, 9.0;
  CHECK(frame_posteriors(one, x)(0) == 1.0);

  Eigen::VectorXd w2(2);
  w2 << 0.5, 0.5;
  Eigen::MatrixXd m(2, 2);
  m << -1.0, 2.0, 1.0, 2.0;
  DiagonalGmm sym(w2, m, Eigen::MatrixXd::Ones(2, 2));
  Eigen::VectorXd mid(2);
  mid << 0.0, 5.0;
  Eigen::VectorXd p = frame_posteriors(sym, mid);
  CHECK(std::abs(p(0) - 0.5) <= 1e-12);
  CHECK(std::abs(p(1) - 0.5) <= 1e-12);
}

TEST_CASE("posteriors match brute-force density ratios") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  for (std::uint64_t s = 0; s < 5; ++s) {
    DiagonalGmm gmm = random_gmm(4, 3, s);
    Eigen::MatrixXd frames(20, 3);
    for (Eigen::Index i = 0; i < frames.size(); ++i) frames(i) = g(rng);
    Eigen::MatrixXd wld = gmm.weighted_log_densities(frames);
    for (Eigen::Index t = 0; t < frames.rows(); ++t) {
      Eigen::VectorXd x = frames.row(t).transpose();
      Eigen::VectorXd dens(4);
      for (int c = 0; c < 4; ++c)
        dens(c) = gmm.weights()(c) *
                  gauss(x, gmm.means().row(c).transpose(), gmm.variances().row(c).transpose());
      Eigen::VectorXd ref = dens / dens.sum();
      Eigen::VectorXd p = frame_posteriors(gmm, x);
      CHECK((p - ref).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(std::abs(p.sum() - 1.0) <= 1e-10);
      for (int c = 0; c < 4; ++c) CHECK(std::abs(wld(t, c) - std::log(dens(c))) <= 1e-9);
      CHECK(std::abs(gmm.log_likelihood(x) - std::log(dens.sum())) <= 1e-9);
    }
  }
}

TEST_CASE("single-component training is closed form") {
  Eigen::MatrixXd x = mixture_data(400, 3, 3, 2);
  UbmTrainConfig cfg;
  cfg.components = 1;
  cfg.em_iters = 3;
  UbmTrainResult r = train_ubm(x, cfg);
  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd var = (x.rowwise() - mean).array().square().colwise().mean();
  CHECK(r.gmm.weights()(0) == doctest::Approx(1.0));
  CHECK((r.gmm.means().row(0) - mean).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((r.gmm.variances().row(0) - var).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("two-cluster mean recovery") {
  UbmTrainConfig cfg;
  cfg.components = 2;
  cfg.seed = 3;
  UbmTrainResult r = train_ubm(two_clusters(2000, 4), cfg);
  double lo = std::min(r.gmm.means()(0, 0), r.gmm.means()(1, 0));
  double hi = std::max(r.gmm.means()(0, 0), r.gmm.means()(1, 0));
  CHECK(std::abs(lo + 10.0) <= 0.1);
  CHECK(std::abs(hi - 10.0) <= 0.1);
}

TEST_CASE("EM log-likelihood is monotone") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    UbmTrainConfig cfg;
    cfg.components = 8;
    cfg.em_iters = 20;
    cfg.tol = 0.0;
    cfg.seed = seed;
    UbmTrainResult r = train_ubm(mixture_data(3000, 4, 6, 10 + seed), cfg);
    REQUIRE(r.avg_log_likelihood.size() >= 2);
    for (std::size_t i = 1; i < r.avg_log_likelihood.size(); ++i) {
      const double prev = r.avg_log_likelihood[i - 1];
      CHECK(r.avg_log_likelihood[i] >= prev - 1e-8 * std::abs(prev));
    }
  }
}

TEST_CASE("variance floor holds after training") {
  Eigen::MatrixXd x = mixture_data(1000, 2, 3, 5);
  // A block of identical frames drives one component's variance to zero.
  x.topRows(200).rowwise() = Eigen::RowVector2d(40.0, -40.0);
  UbmTrainConfig cfg;
  cfg.components = 4;
  cfg.var_floor_rel = 1e-3;
  UbmTrainResult r = train_ubm(x, cfg);
  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd var = (x.rowwise() - mean).array().square().colwise().mean();
  for (Eigen::Index c = 0; c < 4; ++c)
    for (Eigen::Index j = 0; j < 2; ++j)
      CHECK(r.gmm.variances()(c, j) >= cfg.var_floor_rel * var(j) * (1.0 - 1e-12));
}

TEST_CASE("training is deterministic and rejects tiny data") {
  Eigen::MatrixXd x = mixture_data(2000, 3, 4, 6);
  UbmTrainConfig cfg;
  cfg.components = 4;
  cfg.seed = 9;
  UbmTrainResult a = train_ubm(x, cfg), b = train_ubm(x, cfg);
  CHECK(a.gmm.means() == b.gmm.means());
  CHECK(a.gmm.variances() == b.gmm.variances());
  CHECK(a.gmm.fingerprint() == b.gmm.fingerprint());
  cfg.components = 300;
  CHECK_THROWS_AS(train_ubm(x, cfg), DataError);
}

TEST_CASE("stats: hard counts, centring and additivity") {
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  Eigen::MatrixXd m(2, 1);
  m << -10.0, 10.0;
  DiagonalGmm gmm(w, m, Eigen::MatrixXd::Ones(2, 1));
  Eigen::MatrixXd x = two_clusters(300, 7);
  x.conservativeResize(550, 1);  // 300 left, 250 right
  SufficientStats s = accumulate_stats(gmm, x);
  CHECK(std::abs(s.zeroth(0) - 300.0) <= 0.01);
  CHECK(std::abs(s.zeroth(1) - 250.0) <= 0.01);
  CHECK(s.frames == 550.0);

  Eigen::MatrixXd at(4, 1);
  at << -10.0, 10.0, -10.0, 10.0;
  SufficientStats z = accumulate_stats(gmm, at);
  CHECK(z.first.cwiseAbs().maxCoeff() == 0.0);

  DiagonalGmm r = random_gmm(5, 3, 4);
  Eigen::MatrixXd a = mixture_data(300, 3, 2, 1), b = mixture_data(200, 3, 2, 2);
  Eigen::MatrixXd ab(500, 3);
  ab << a, b;
  SufficientStats sa = accumulate_stats(r, a), sb = accumulate_stats(r, b), sab = accumulate_stats(r, ab);
  sa += sb;
  CHECK((sa.zeroth - sab.zeroth).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((sa.first - sab.first).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(sa.frames == sab.frames);

  SufficientStats other = accumulate_stats(random_gmm(5, 3, 5), a);
  CHECK_THROWS_AS(sa += other, UsageError);
}

TEST_CASE("save and load round trip") {
  auto dir = test::temp_dir("gmm");
  DiagonalGmm g = random_gmm(6, 4, 8);
  g.save(dir / "u.vqgm");
  DiagonalGmm h = DiagonalGmm::load(dir / "u.vqgm");
  CHECK(h.means() == g.means());
  CHECK(h.variances() == g.variances());
  CHECK(h.weights() == g.weights());
  CHECK(h.fingerprint() == g.fingerprint());
  CHECK(g.supervector().size() == 24);
  CHECK(g.supervector()(4 + 1) == g.means()(1, 1));
  CHECK_THROWS_AS(DiagonalGmm::load(dir / "missing.vqgm"), DataError);
}
