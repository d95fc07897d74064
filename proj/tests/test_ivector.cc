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

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <random>

#include "test_util.h"
#include "vqid/error.h"
#include "vqid/ivector.h"
#include "vqid/log.h"

using namespace vqid;

namespace {

std::shared_ptr<const DiagonalGmm> unit_ubm(int c, int f, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(c, f);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = spread * g(rng);
  return std::make_shared<const DiagonalGmm>(Eigen::VectorXd::Constant(c, 1.0 / c), m,
                                             Eigen::MatrixXd::Ones(c, f));
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
  return m;
}

SufficientStats random_stats(const DiagonalGmm &ubm, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::normal_distribution<double> g;
  SufficientStats s;
  s.zeroth.resize(ubm.components());
  s.first.resize(ubm.components(), ubm.dim());
  for (Eigen::Index c = 0; c < s.zeroth.size(); ++c) {
    s.zeroth(c) = u(rng);
    for (Eigen::Index j = 0; j < ubm.dim(); ++j) s.first(c, j) = s.zeroth(c) * 0.3 * g(rng);
  }
  s.frames = s.zeroth.sum();
  s.ubm_fingerprint = ubm.fingerprint();
  return s;
}

// Frames of one utterance drawn from components with means m_c + T_c w.
Eigen::MatrixXd utterance(const DiagonalGmm &ubm, const Eigen::MatrixXd &t, const Eigen::VectorXd &w,
                          int frames, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  const Eigen::Index f = ubm.dim();
  Eigen::VectorXd shift = t * w;
  Eigen::MatrixXd x(frames, f);
  for (int i = 0; i < frames; ++i) {
    const auto c = static_cast<Eigen::Index>(rng() % ubm.components());
    for (Eigen::Index j = 0; j < f; ++j) x(i, j) = ubm.means()(c, j) + shift(c * f + j) + g(rng);
  }
  return x;
}

// Largest principal angle between two column spaces, degrees.
double max_principal_angle(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
  Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                       Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() *
                       Eigen::MatrixXd::Identity(b.rows(), b.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(qa.transpose() * qb);
  const double smin = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(smin) * 180.0 / std::numbers::pi;
}

}  // namespace

TEST_CASE("stage transitions move forward only") {
  IVector v;
  advance_stage(v, IvectorStage::kLda);
  CHECK_THROWS_AS(advance_stage(v, IvectorStage::kRaw), UsageError);
  CHECK_THROWS_AS(advance_stage(v, IvectorStage::kLda), UsageError);
  advance_stage(v, IvectorStage::kLengthNormalized);
  CHECK(v.stage == IvectorStage::kLengthNormalized);
  CHECK(parse_stage(stage_name(IvectorStage::kCentered)) == IvectorStage::kCentered);
}

TEST_CASE("zero T gives a zero i-vector") {
  auto ubm = unit_ubm(4, 3, 2.0, 1);
  TotalVariabilityModel tv(ubm, Eigen::MatrixXd::Zero(12, 5));
  IVector v = extract_ivector(random_stats(*ubm, 2), tv);
  CHECK(v.w.size() == 5);
  CHECK(v.w == Eigen::VectorXd::Zero(5));
}

TEST_CASE("empty stats give zero with a warning") {
  auto ubm = unit_ubm(4, 3, 2.0, 1);
  TotalVariabilityModel tv(ubm, random_matrix(12, 5, 3));
  SufficientStats s = random_stats(*ubm, 2);
  s.zeroth.setZero();
  s.first.setZero();
  s.frames = 0.0;
  int warnings = 0;
  {
    ScopedLogSink sink([&](LogLevel l, const std::string &) { warnings += l == LogLevel::kWarning; });
    IVector v = extract_ivector(s, tv, "empty");
    CHECK(v.w == Eigen::VectorXd::Zero(5));
  }
  CHECK(warnings == 1);
}

TEST_CASE("scalar closed form matches numerical posterior maximization") {
  auto ubm = std::make_shared<const DiagonalGmm>(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 1),
                                                 Eigen::MatrixXd::Ones(1, 1));
  for (auto [t, n, f] : {std::tuple{0.7, 12.0, 3.5}, std::tuple{-1.3, 40.0, -8.0},
                         std::tuple{0.05, 3.0, 0.4}}) {
    TotalVariabilityModel tv(ubm, Eigen::MatrixXd::Constant(1, 1, t));
    SufficientStats s;
    s.zeroth = Eigen::VectorXd::Constant(1, n);
    s.first = Eigen::MatrixXd::Constant(1, 1, f);
    s.frames = n;
    s.ubm_fingerprint = ubm->fingerprint();
    const double w = extract_ivector(s, tv).w(0);
    CHECK(std::abs(w - t * f / (1.0 + n * t * t)) <= 1e-12);
    // Golden-section search on the log posterior -w^2/2 + t w f - n t^2 w^2 / 2.
    auto logpost = [&](double x) { return -0.5 * x * x + t * x * f - 0.5 * n * t * t * x * x; };
    double a = -100.0, b = 100.0;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
      double c = b - r * (b - a), d = a + r * (b - a);
      if (logpost(c) > logpost(d)) b = d;
      else a = c;
    }
    CHECK(std::abs(w - 0.5 * (a + b)) <= 1e-6);
  }
}

TEST_CASE("posterior precision has eigenvalues at least one") {
  auto ubm = unit_ubm(8, 4, 2.0, 5);
  TotalVariabilityModel tv(ubm, random_matrix(32, 6, 6));
  for (std::uint64_t s = 0; s < 20; ++s) {
    IvectorPosterior p = ivector_posterior(random_stats(*ubm, 100 + s), tv);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.precision);
    CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-8);
  }
}

TEST_CASE("scaling the evidence moves w toward the fixed point") {
  auto ubm = unit_ubm(6, 3, 2.0, 7);
  TotalVariabilityModel tv(ubm, random_matrix(18, 4, 8, 0.5));
  SufficientStats base = random_stats(*ubm, 9);
  IvectorPosterior p = ivector_posterior(base, tv);
  Eigen::MatrixXd a = p.precision - Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd w_inf = a.ldlt().solve(p.linear);
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {0.0, 0.01, 0.1, 0.5, 1.0, 4.0, 20.0, 100.0}) {
    SufficientStats s = base;
    s.zeroth *= alpha;
    s.first *= alpha;
    s.frames *= alpha;
    Eigen::VectorXd w = extract_ivector(s, tv).w;
    if (alpha == 0.0) CHECK(w == Eigen::VectorXd::Zero(4));
    const double d = (w - w_inf).norm();
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("supervector reconstruction") {
  auto ubm = unit_ubm(5, 3, 2.0, 3);
  Eigen::MatrixXd t = random_matrix(15, 4, 4);
  TotalVariabilityModel tv(ubm, t);
  CHECK(reconstruct_supervector(tv, Eigen::VectorXd::Zero(4)) == ubm->supervector());
  Eigen::VectorXd e1 = Eigen::VectorXd::Unit(4, 0);
  CHECK((reconstruct_supervector(tv, e1) - ubm->supervector() - t.col(0)).cwiseAbs().maxCoeff() <= 1e-15);
  Eigen::VectorXd w = random_matrix(4, 1, 5).col(0);
  Eigen::VectorXd naive = ubm->supervector();
  for (Eigen::Index r = 0; r < 15; ++r)
    for (Eigen::Index c = 0; c < 4; ++c) naive(r) += t(r, c) * w(c);
  CHECK((reconstruct_supervector(tv, w) - naive).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("planted subspace recovery") {
  auto ubm = unit_ubm(4, 3, 12.0, 11);
  Eigen::MatrixXd t_star = random_matrix(12, 2, 12, 1.0);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  std::vector<SufficientStats> stats;
  for (int u = 0; u < 300; ++u) {
    Eigen::VectorXd w(2);
    w << g(rng), g(rng);
    stats.push_back(accumulate_stats(*ubm, utterance(*ubm, t_star, w, 200, rng)));
  }
  TvTrainConfig cfg;
  cfg.ivector_dim = 2;
  cfg.em_iters = 10;
  cfg.seed = 14;
  cfg.init_scale = 0.1;
  TvTrainResult r = train_total_variability(stats, ubm, cfg);
  CHECK(max_principal_angle(r.model.t(), t_star) < 5.0);
  CHECK(r.objective.size() == 10);
}

TEST_CASE("full-rank T lowers the reconstruction error") {
  auto ubm = unit_ubm(2, 2, 12.0, 21);
  Eigen::MatrixXd t_star = random_matrix(4, 4, 22, 0.8);
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g;
  std::vector<SufficientStats> stats;
  for (int u = 0; u < 400; ++u) {
    Eigen::VectorXd w(4);
    for (auto &x : w) x = g(rng);
    stats.push_back(accumulate_stats(*ubm, utterance(*ubm, t_star, w, 300, rng)));
  }
  TvTrainConfig cfg;
  cfg.ivector_dim = 4;
  cfg.em_iters = 6;
  cfg.seed = 24;
  TvTrainResult r = train_total_variability(stats, ubm, cfg);
  for (std::size_t i = 1; i < r.reconstruction_error.size(); ++i)
    CHECK(r.reconstruction_error[i] < r.reconstruction_error[i - 1]);
  // Extraction then reconstruction approaches the utterance mean offsets.
  const SufficientStats &s = stats[0];
  Eigen::VectorXd w = extract_ivector(s, r.model).w;
  Eigen::VectorXd sv = reconstruct_supervector(r.model, w) - ubm->supervector();
  for (Eigen::Index c = 0; c < 2; ++c)
    for (Eigen::Index j = 0; j < 2; ++j)
      CHECK(std::abs(sv(c * 2 + j) - s.first(c, j) / s.zeroth(c)) < 0.25);
}

TEST_CASE("training is deterministic and duplicates share i-vectors") {
  auto ubm = unit_ubm(3, 2, 6.0, 31);
  SufficientStats s = random_stats(*ubm, 32);
  std::vector<SufficientStats> same(10, s);
  TvTrainConfig cfg;
  cfg.ivector_dim = 2;
  cfg.em_iters = 4;
  cfg.seed = 33;
  TvTrainResult a = train_total_variability(same, ubm, cfg);
  TvTrainResult b = train_total_variability(same, ubm, cfg);
  CHECK(a.model.t() == b.model.t());
  CHECK(a.model.t().allFinite());
  CHECK(extract_ivector(same[0], a.model).w == extract_ivector(same[7], a.model).w);
}

TEST_CASE("model files and i-vector tables") {
  auto dir = test::temp_dir("ivector");
  auto ubm = unit_ubm(3, 2, 6.0, 41);
  TotalVariabilityModel tv(ubm, random_matrix(6, 3, 42));
  tv.save(dir / "t.vqtv");
  CHECK(TotalVariabilityModel::load(dir / "t.vqtv", ubm).t() == tv.t());
  CHECK_THROWS_AS(TotalVariabilityModel::load(dir / "t.vqtv", unit_ubm(3, 2, 6.0, 43)), DataError);

  std::vector<IVector> vs = {{random_matrix(3, 1, 1).col(0), "a/normal/8s/0", IvectorStage::kRaw},
                             {random_matrix(3, 1, 2).col(0), "a/fry/8s/1", IvectorStage::kRaw}};
  write_ivectors_csv(dir / "i.csv", vs);
  std::vector<IVector> back = read_ivectors_csv(dir / "i.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].w == vs[1].w);
  CHECK(back[1].id == vs[1].id);

  SufficientStats foreign = random_stats(*unit_ubm(3, 2, 6.0, 44), 1);
  CHECK_THROWS_AS(extract_ivector(foreign, tv), UsageError);
}
