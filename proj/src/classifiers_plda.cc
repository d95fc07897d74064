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

#include "vqid/plda.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <limits>
#include <numbers>

#include "vqid/binary_io.h"
#include "vqid/error.h"
#include "vqid/log.h"

namespace vqid {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd &m) { return 0.5 * (m + m.transpose()); }

// Clamps eigenvalues of a symmetric matrix from below.
Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd &m, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

double gaussian_log_density(const Eigen::VectorXd &x, const Eigen::VectorXd &mean,
                            const Eigen::MatrixXd &cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("covariance is not positive definite");
  Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det + z.squaredNorm());
}

struct ClassData {
  std::vector<Eigen::VectorXd> samples;
  Eigen::VectorXd mean;
};

// Posterior of the class variable given n samples with mean xbar.
void class_posterior(const PldaModel &m, const Eigen::VectorXd &xbar, double n,
                     Eigen::VectorXd &mean, Eigen::MatrixXd &cov) {
  Eigen::MatrixXd s = m.phi_b + m.phi_w / n;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(symmetrize(s));
  if (ldlt.info() != Eigen::Success) throw NumericError("PLDA class posterior is singular");
  Eigen::MatrixXd gain = ldlt.solve(m.phi_b).transpose();  // phi_b s^-1
  mean = m.mu + gain * (xbar - m.mu);
  cov = symmetrize(m.phi_b - gain * m.phi_b);
}

}  // namespace

void PldaModel::validate() const {
  const Eigen::Index d = mu.size();
  if (d < 1 || phi_b.rows() != d || phi_b.cols() != d || phi_w.rows() != d || phi_w.cols() != d)
    throw UsageError("PLDA parameter shapes disagree");
  if (!mu.allFinite() || !phi_b.allFinite() || !phi_w.allFinite())
    throw NumericError("PLDA parameters contain non-finite values");
  if (Eigen::LLT<Eigen::MatrixXd>(phi_w).info() != Eigen::Success)
    throw NumericError("PLDA within-class covariance is not positive definite");
}

void PldaModel::save(const std::filesystem::path &path) const {
  validate();
  BinaryWriter w(path, "VQPL", 1);
  w.u64(static_cast<std::uint64_t>(dim()));
  w.vec(mu);
  w.mat_row_major(phi_b);
  w.mat_row_major(phi_w);
  w.close();
}

PldaModel PldaModel::load(const std::filesystem::path &path) {
  BinaryReader r(path, "VQPL");
  if (r.version() != 1) throw DataError("unsupported VQPL version in " + path.string());
  std::uint64_t d = r.u64();
  if (d == 0 || d > 100000) throw DataError("implausible PLDA dimension in " + path.string());
  const auto n = static_cast<Eigen::Index>(d);
  PldaModel m;
  m.mu = r.vec(n);
  m.phi_b = r.mat_row_major(n, n);
  m.phi_w = r.mat_row_major(n, n);
  r.expect_end();
  m.validate();
  return m;
}

double plda_class_log_likelihood(const PldaModel &model,
                                 const std::vector<Eigen::VectorXd> &samples) {
  if (samples.empty()) throw UsageError("class has no samples");
  const Eigen::Index d = model.dim();
  const double n = static_cast<double>(samples.size());
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(d);
  for (const auto &x : samples) xbar += x;
  xbar /= n;
  // Deviations from the class mean are independent of the mean itself.
  Eigen::LLT<Eigen::MatrixXd> w_llt(model.phi_w);
  if (w_llt.info() != Eigen::Success) throw NumericError("PLDA within-class covariance is singular");
  double log_det_w = 2.0 * w_llt.matrixLLT().diagonal().array().log().sum();
  double quad = 0.0;
  for (const auto &x : samples) quad += w_llt.matrixL().solve(x - xbar).squaredNorm();
  const double dd = static_cast<double>(d);
  double ll = -0.5 * ((n - 1.0) * dd * kLog2Pi + (n - 1.0) * log_det_w + dd * std::log(n) + quad);
  ll += gaussian_log_density(xbar, model.mu, model.phi_b + model.phi_w / n);
  return ll;
}

PldaTrainResult train_plda(const std::vector<Eigen::VectorXd> &x,
                           const std::vector<std::string> &labels, int em_iters) {
  if (x.size() != labels.size()) throw UsageError("vector and label counts differ");
  if (x.empty()) throw DataError("PLDA training needs data");
  if (em_iters < 0) throw UsageError("PLDA em_iters must be non-negative");
  const Eigen::Index d = x[0].size();
  std::map<std::string, ClassData> classes;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != d) throw UsageError("PLDA training vectors differ in dimension");
    if (!x[i].allFinite()) throw NumericError("PLDA training vector is not finite");
    classes[labels[i]].samples.push_back(x[i]);
  }
  if (classes.size() < 2) throw DataError("PLDA training needs at least two classes");
  bool any_pair = false;
  for (const auto &[label, c] : classes) any_pair = any_pair || c.samples.size() >= 2;
  if (!any_pair)
    throw DataError("PLDA within-class covariance is unidentifiable: every class has one sample");

  const double n_total = static_cast<double>(x.size());
  const double k_total = static_cast<double>(classes.size());
  Eigen::VectorXd global = Eigen::VectorXd::Zero(d);
  for (const auto &v : x) global += v;
  global /= n_total;
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(d, d), between = Eigen::MatrixXd::Zero(d, d);
  for (auto &[label, c] : classes) {
    c.mean = Eigen::VectorXd::Zero(d);
    for (const auto &v : c.samples) c.mean += v;
    c.mean /= static_cast<double>(c.samples.size());
    for (const auto &v : c.samples) within.noalias() += (v - c.mean) * (v - c.mean).transpose();
    between.noalias() += (c.mean - global) * (c.mean - global).transpose();
  }
  within /= n_total;
  between /= k_total;
  const double scale = (within + between).trace() / static_cast<double>(d);
  if (!(scale > 0.0)) throw DataError("PLDA training vectors are all identical");
  if (!(within.trace() > 1e-12 * scale * static_cast<double>(d)))
    throw DataError("PLDA training vectors do not vary within classes");

  auto w_floor = [&](const Eigen::MatrixXd &m) {
    return floor_eigenvalues(m, 1e-8 * m.trace() / static_cast<double>(d));
  };
  auto b_floor = [&](const Eigen::MatrixXd &m) { return floor_eigenvalues(m, 1e-12 * scale); };

  PldaTrainResult result;
  PldaModel &model = result.model;
  model.mu = global;
  model.phi_w = w_floor(within);
  model.phi_b = b_floor(between);

  auto total_ll = [&]() {
    double ll = 0.0;
    for (const auto &[label, c] : classes) ll += plda_class_log_likelihood(model, c.samples);
    return ll;
  };

  for (int it = 0; it < em_iters; ++it) {
    result.log_likelihood.push_back(total_ll());
    Eigen::VectorXd mu_acc = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd b_acc = Eigen::MatrixXd::Zero(d, d), w_acc = Eigen::MatrixXd::Zero(d, d);
    std::vector<Eigen::VectorXd> means;
    means.reserve(classes.size());
    for (const auto &[label, c] : classes) {
      const double n = static_cast<double>(c.samples.size());
      Eigen::VectorXd yk;
      Eigen::MatrixXd ck;
      class_posterior(model, c.mean, n, yk, ck);
      mu_acc += yk;
      b_acc += ck;
      for (const auto &v : c.samples) w_acc.noalias() += (v - yk) * (v - yk).transpose();
      w_acc += n * ck;
      means.push_back(std::move(yk));
    }
    Eigen::VectorXd mu = mu_acc / k_total;
    for (const auto &yk : means) b_acc.noalias() += (yk - mu) * (yk - mu).transpose();
    model.mu = mu;
    model.phi_b = b_floor(b_acc / k_total);
    model.phi_w = w_floor(w_acc / n_total);
    if (!model.phi_b.allFinite() || !model.phi_w.allFinite())
      throw NumericError("PLDA EM produced non-finite covariances");
  }
  result.log_likelihood.push_back(total_ll());
  log_info("plda final log-likelihood " + std::to_string(result.log_likelihood.back()));
  return result;
}

PldaScorer::Predictive PldaScorer::make_predictive(const Eigen::VectorXd &mean,
                                                   const Eigen::MatrixXd &cov) {
  Predictive p;
  p.mean = mean;
  p.chol.compute(symmetrize(cov));
  if (p.chol.info() != Eigen::Success)
    throw NumericError("PLDA predictive covariance is not positive definite");
  p.log_det = 2.0 * p.chol.matrixLLT().diagonal().array().log().sum();
  return p;
}

double PldaScorer::log_density(const Predictive &p, const Eigen::VectorXd &x) {
  Eigen::VectorXd z = p.chol.matrixL().solve(x - p.mean);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + p.log_det + z.squaredNorm());
}

PldaScorer::Predictive PldaScorer::enrolled_predictive(
    const PldaModel &model, const std::vector<Eigen::VectorXd> &vectors) const {
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(dim_);
  for (const auto &v : vectors) {
    if (v.size() != dim_) throw UsageError("enrollment vector dimension does not match PLDA");
    xbar += v;
  }
  const double n = static_cast<double>(vectors.size());
  xbar /= n;
  Eigen::VectorXd yk;
  Eigen::MatrixXd ck;
  class_posterior(model, xbar, n, yk, ck);
  return make_predictive(yk, ck + model.phi_w);
}

PldaScorer::PldaScorer(const PldaModel &model, std::vector<ClassEnrollment> enrollments,
                       PldaScoring mode)
    : dim_(model.dim()), mode_(mode) {
  model.validate();
  if (enrollments.empty()) throw UsageError("PLDA scoring needs at least one enrolled class");
  std::sort(enrollments.begin(), enrollments.end(),
            [](const ClassEnrollment &a, const ClassEnrollment &b) { return a.label < b.label; });
  for (std::size_t i = 0; i < enrollments.size(); ++i) {
    const ClassEnrollment &e = enrollments[i];
    if (i > 0 && e.label == enrollments[i - 1].label)
      throw UsageError("duplicate enrollment label '" + e.label + "'");
    if (e.vectors.empty()) throw UsageError("enrollment '" + e.label + "' has no vectors");
    labels_.push_back(e.label);
    std::vector<Predictive> preds;
    if (mode_ == PldaScoring::kPooled) {
      preds.push_back(enrolled_predictive(model, e.vectors));
    } else {
      for (const auto &v : e.vectors) preds.push_back(enrolled_predictive(model, {v}));
    }
    classes_.push_back(std::move(preds));
  }
  background_ = make_predictive(model.mu, model.phi_b + model.phi_w);
}

std::vector<double> PldaScorer::scores(const Eigen::VectorXd &x) const {
  if (x.size() != dim_)
    throw UsageError("test vector has dimension " + std::to_string(x.size()) +
                     ", PLDA expects " + std::to_string(dim_));
  if (!x.allFinite()) throw NumericError("test vector is not finite");
  const double bg = log_density(background_, x);
  std::vector<double> out;
  out.reserve(classes_.size());
  for (const auto &preds : classes_) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto &p : preds) best = std::max(best, log_density(p, x));
    out.push_back(best - bg);
  }
  return out;
}

PldaDecision PldaScorer::classify(const Eigen::VectorXd &x) const {
  PldaDecision d;
  d.labels = labels_;
  d.scores = scores(x);
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.scores.size(); ++i)
    if (d.scores[i] > d.scores[best]) best = i;
  d.label = labels_[best];
  return d;
}

}  // namespace vqid
