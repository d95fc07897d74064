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

#ifndef VQID_GMM_H_
#define VQID_GMM_H_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "vqid/features.h"

namespace vqid {

// Diagonal-covariance Gaussian mixture, used as the universal background
// model. Immutable once constructed.
class DiagonalGmm {
 public:
  DiagonalGmm() = default;
  // weights: C, means and variances: C x F. Throws UsageError unless the
  // weights are non-negative and sum to 1 within 1e-10 and every variance is
  // positive and finite.
  DiagonalGmm(Eigen::VectorXd weights, Eigen::MatrixXd means,
              Eigen::MatrixXd variances);

  Eigen::Index components() const { return weights_.size(); }
  Eigen::Index dim() const { return means_.cols(); }
  const Eigen::VectorXd &weights() const { return weights_; }
  const Eigen::MatrixXd &means() const { return means_; }
  const Eigen::MatrixXd &variances() const { return variances_; }

  // log(pi_c) + log N(x_t; m_c, Sigma_c) for a block of frames (T x C).
  Eigen::MatrixXd weighted_log_densities(const Eigen::MatrixXd &frames) const;
  double log_likelihood(const Eigen::VectorXd &frame) const;

  // Component means stacked component-major (C*F).
  Eigen::VectorXd supervector() const;
  // Hash of the parameters; stats carry it to catch model mix-ups.
  std::uint64_t fingerprint() const { return fingerprint_; }

  void save(const std::filesystem::path &path) const;
  static DiagonalGmm load(const std::filesystem::path &path);

 private:
  Eigen::VectorXd weights_;
  Eigen::MatrixXd means_, variances_;
  Eigen::MatrixXd inv_var_, mean_inv_var_;
  Eigen::VectorXd log_const_;
  std::uint64_t fingerprint_ = 0;
};

// Responsibilities of each component for one frame, via log-sum-exp.
Eigen::VectorXd frame_posteriors(const DiagonalGmm &gmm, const Eigen::VectorXd &frame);

// Zeroth-order counts N_c and first-order stats centred on the UBM means,
// F_c = sum_t gamma_t(c) (x_t - m_c).
struct SufficientStats {
  Eigen::VectorXd zeroth;      // C
  Eigen::MatrixXd first;       // C x F, centred
  double frames = 0.0;
  std::uint64_t ubm_fingerprint = 0;

  SufficientStats &operator+=(const SufficientStats &other);
};

SufficientStats accumulate_stats(const DiagonalGmm &gmm, const FeatureMatrix &feat);
SufficientStats accumulate_stats(const DiagonalGmm &gmm, const Eigen::MatrixXd &frames);

struct UbmTrainConfig {
  int components = 256;
  int em_iters = 20;
  std::uint64_t seed = 0;
  // Stop when the relative gain in average log-likelihood drops below this.
  double tol = 1e-6;
  // Variance floor as a fraction of the global per-dimension variance.
  double var_floor_rel = 1e-4;
  // Frames sampled for k-means++ seeding.
  std::size_t kmeans_sample = 50000;
};

struct UbmTrainResult {
  DiagonalGmm gmm;
  // Average per-frame log-likelihood of the data under the model entering
  // each EM iteration.
  std::vector<double> avg_log_likelihood;
};

// k-means++ seeding, one hard assignment pass, then EM. `frames` holds every
// training frame (T x F). Throws DataError if T < 10 * components and
// NumericError on non-finite input.
UbmTrainResult train_ubm(const Eigen::MatrixXd &frames, const UbmTrainConfig &cfg);
UbmTrainResult train_ubm(const std::vector<FeatureMatrix> &features,
                         const UbmTrainConfig &cfg);

}  // namespace vqid

#endif  // VQID_GMM_H_
