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

#include "vqid/lda.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "vqid/binary_io.h"
#include "vqid/error.h"

namespace vqid {

LdaTransform::LdaTransform(Eigen::MatrixXd projection, Eigen::VectorXd mean, int classes)
    : projection_(std::move(projection)), mean_(std::move(mean)), classes_(classes) {
  if (projection_.cols() < 1 || projection_.rows() < projection_.cols())
    throw UsageError("LDA projection must be M x d with 1 <= d <= M");
  if (mean_.size() != projection_.cols())
    throw UsageError("LDA mean dimension does not match the projection");
  if (!projection_.allFinite() || !mean_.allFinite())
    throw NumericError("LDA parameters contain non-finite values");
}

LdaTransform LdaTransform::identity(const std::vector<Eigen::VectorXd> &training) {
  if (training.empty()) throw DataError("identity transform needs training vectors");
  const Eigen::Index m = training[0].size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  for (const auto &x : training) {
    if (x.size() != m) throw UsageError("training vectors differ in dimension");
    mean += x;
  }
  mean /= static_cast<double>(training.size());
  return LdaTransform(Eigen::MatrixXd::Identity(m, m), mean, 0);
}

Eigen::VectorXd LdaTransform::project(const Eigen::VectorXd &w) const {
  if (w.size() != input_dim())
    throw UsageError("vector has dimension " + std::to_string(w.size()) + ", LDA expects " +
                     std::to_string(input_dim()));
  return projection_.transpose() * w;
}

void LdaTransform::save(const std::filesystem::path &path) const {
  BinaryWriter w(path, "VQLD", 1);
  w.u64(static_cast<std::uint64_t>(input_dim()));
  w.u64(static_cast<std::uint64_t>(output_dim()));
  w.u64(static_cast<std::uint64_t>(classes_));
  w.mat_row_major(projection_);
  w.vec(mean_);
  w.close();
}

LdaTransform LdaTransform::load(const std::filesystem::path &path) {
  BinaryReader r(path, "VQLD");
  if (r.version() != 1) throw DataError("unsupported VQLD version in " + path.string());
  std::uint64_t m = r.u64(), d = r.u64(), k = r.u64();
  if (m == 0 || d == 0 || d > m || m > 100000)
    throw DataError("implausible LDA dimensions in " + path.string());
  Eigen::MatrixXd p = r.mat_row_major(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  Eigen::VectorXd mean = r.vec(static_cast<Eigen::Index>(d));
  r.expect_end();
  return LdaTransform(std::move(p), std::move(mean), static_cast<int>(k));
}

ScatterMatrices scatter_matrices(const std::vector<Eigen::VectorXd> &x,
                                 const std::vector<std::string> &labels) {
  if (x.size() != labels.size()) throw UsageError("vector and label counts differ");
  if (x.empty()) throw DataError("no vectors to compute scatter from");
  const Eigen::Index m = x[0].size();
  std::map<std::string, std::pair<Eigen::VectorXd, double>> sums;
  ScatterMatrices s;
  s.mean = Eigen::VectorXd::Zero(m);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != m) throw UsageError("vectors differ in dimension");
    if (!x[i].allFinite()) throw NumericError("vector '" + labels[i] + "' is not finite");
    auto [it, fresh] = sums.try_emplace(labels[i], Eigen::VectorXd::Zero(m), 0.0);
    it->second.first += x[i];
    it->second.second += 1.0;
    s.mean += x[i];
  }
  const double n = static_cast<double>(x.size());
  s.mean /= n;
  std::map<std::string, Eigen::VectorXd> class_mean;
  s.between = Eigen::MatrixXd::Zero(m, m);
  for (auto &[label, sc] : sums) {
    Eigen::VectorXd mu = sc.first / sc.second;
    Eigen::VectorXd d = mu - s.mean;
    s.between.noalias() += sc.second * d * d.transpose();
    class_mean.emplace(label, std::move(mu));
  }
  s.within = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < x.size(); ++i) {
    Eigen::VectorXd d = x[i] - class_mean.at(labels[i]);
    s.within.noalias() += d * d.transpose();
  }
  s.between /= n;
  s.within /= n;
  s.classes = static_cast<int>(sums.size());
  return s;
}

LdaTransform fit_lda(const std::vector<Eigen::VectorXd> &x,
                     const std::vector<std::string> &labels, int d) {
  ScatterMatrices s = scatter_matrices(x, labels);
  const Eigen::Index m = s.mean.size();
  if (s.classes < 2) throw DataError("LDA needs at least two classes");
  if (d < 1) throw UsageError("LDA dimension must be positive");
  if (d > s.classes - 1)
    throw UsageError("LDA dimension " + std::to_string(d) + " exceeds classes - 1 = " +
                     std::to_string(s.classes - 1));
  if (d > m)
    throw UsageError("LDA dimension " + std::to_string(d) + " exceeds input dimension " +
                     std::to_string(m));
  std::map<std::string, int> counts;
  for (const auto &l : labels) ++counts[l];
  for (const auto &[label, n] : counts)
    if (n < 2) throw DataError("LDA class '" + label + "' has fewer than two samples");

  const double tw = s.within.trace(), tb = s.between.trace();
  if (!(tw > 0.0)) throw NumericError("within-class scatter is zero; LDA is undefined");
  if (!(tb > 1e-12 * tw))
    throw DataError("class means coincide; between-class scatter is degenerate");
  Eigen::MatrixXd sw = s.within;
  sw.diagonal().array() += 1e-6 * tw / static_cast<double>(m);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
      s.between, sw, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success)
    throw NumericError("LDA generalized eigenproblem did not converge");
  Eigen::MatrixXd proj(m, d);
  for (int j = 0; j < d; ++j) {
    Eigen::VectorXd v = ges.eigenvectors().col(m - 1 - j);
    const double tol = 1e-12 * v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::abs(v(i)) > tol) {
        if (v(i) < 0) v = -v;
        break;
      }
    }
    proj.col(j) = v;
  }
  Eigen::VectorXd mean = proj.transpose() * s.mean;
  return LdaTransform(std::move(proj), std::move(mean), s.classes);
}

Eigen::VectorXd length_normalize(const Eigen::VectorXd &v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw NumericError("cannot length-normalize a zero or non-finite vector");
  return v / n;
}

IVector project_center_lnorm(const LdaTransform &lda, const IVector &w) {
  if (w.stage != IvectorStage::kRaw)
    throw UsageError(std::string("expected a raw i-vector, got stage ") + stage_name(w.stage));
  IVector out = w;
  Eigen::VectorXd projected = lda.project(w.w);
  advance_stage(out, IvectorStage::kLda);
  Eigen::VectorXd centered = projected - lda.mean();
  advance_stage(out, IvectorStage::kCentered);
  const double scale = std::max(projected.norm(), lda.mean().norm());
  if (centered.norm() <= 1e-12 * scale)
    throw NumericError("i-vector '" + w.id + "' equals the training mean; zero norm after centering");
  out.w = length_normalize(centered);
  advance_stage(out, IvectorStage::kLengthNormalized);
  return out;
}

}  // namespace vqid
