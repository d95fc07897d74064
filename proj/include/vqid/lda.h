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

#ifndef VQID_LDA_H_
#define VQID_LDA_H_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "vqid/ivector.h"

namespace vqid {

class LdaTransform {
 public:
  LdaTransform() = default;
  // projection: M x d, mean: d (training mean after projection).
  LdaTransform(Eigen::MatrixXd projection, Eigen::VectorXd mean, int classes);

  // Pass-through projection with the training mean; used when the classes
  // carry no between-class scatter.
  static LdaTransform identity(const std::vector<Eigen::VectorXd> &training);

  const Eigen::MatrixXd &projection() const { return projection_; }
  const Eigen::VectorXd &mean() const { return mean_; }
  Eigen::Index input_dim() const { return projection_.rows(); }
  Eigen::Index output_dim() const { return projection_.cols(); }
  int classes() const { return classes_; }

  Eigen::VectorXd project(const Eigen::VectorXd &w) const;

  void save(const std::filesystem::path &path) const;
  static LdaTransform load(const std::filesystem::path &path);

 private:
  Eigen::MatrixXd projection_;
  Eigen::VectorXd mean_;
  int classes_ = 0;
};

// Within- and between-class scatter, each normalized by the sample count.
struct ScatterMatrices {
  Eigen::MatrixXd within, between;
  Eigen::VectorXd mean;
  int classes = 0;
};
ScatterMatrices scatter_matrices(const std::vector<Eigen::VectorXd> &x,
                                 const std::vector<std::string> &labels);

// Top-d generalized eigenvectors of S_b v = lambda S_w v, with S_w
// regularized by 1e-6 * tr(S_w) / M. Columns ordered by decreasing eigenvalue,
// first nonzero entry of each made positive. Throws UsageError if d exceeds
// min(M, classes - 1), DataError on too few samples or zero between-class
// scatter, NumericError on zero within-class scatter.
LdaTransform fit_lda(const std::vector<Eigen::VectorXd> &x,
                     const std::vector<std::string> &labels, int d);

// v / ||v||. Throws NumericError when the norm is zero.
Eigen::VectorXd length_normalize(const Eigen::VectorXd &v);

// Projects a raw i-vector, subtracts the training mean and length-normalizes.
IVector project_center_lnorm(const LdaTransform &lda, const IVector &w);

}  // namespace vqid

#endif  // VQID_LDA_H_
