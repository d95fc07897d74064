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

#ifndef VQID_IVECTOR_H_
#define VQID_IVECTOR_H_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vqid/gmm.h"

namespace vqid {

enum class IvectorStage { kRaw = 0, kLda = 1, kCentered = 2, kLengthNormalized = 3 };

const char *stage_name(IvectorStage stage);
IvectorStage parse_stage(const std::string &name);

struct IVector {
  Eigen::VectorXd w;
  std::string id;
  IvectorStage stage = IvectorStage::kRaw;
};

// Moves `v` to a later stage. Throws UsageError on a backward or repeated
// transition.
void advance_stage(IVector &v, IvectorStage next);

// Supervector model M = m + T w over a bound UBM with fixed covariances.
class TotalVariabilityModel {
 public:
  TotalVariabilityModel() = default;
  // t: (C*F) x M, rows component-major to match DiagonalGmm::supervector.
  TotalVariabilityModel(std::shared_ptr<const DiagonalGmm> ubm, Eigen::MatrixXd t);

  const DiagonalGmm &ubm() const { return *ubm_; }
  std::shared_ptr<const DiagonalGmm> ubm_ptr() const { return ubm_; }
  const Eigen::MatrixXd &t() const { return t_; }
  Eigen::Index ivector_dim() const { return t_.cols(); }

  // Sigma^-1 T, (C*F) x M.
  const Eigen::MatrixXd &t_inv_sigma() const { return t_inv_sigma_; }
  // Column c holds T_c^T Sigma_c^-1 T_c flattened (M*M x C).
  const Eigen::MatrixXd &precision_blocks() const { return precision_blocks_; }

  void save(const std::filesystem::path &path) const;
  // Throws DataError if the file was trained against a different UBM.
  static TotalVariabilityModel load(const std::filesystem::path &path,
                                    std::shared_ptr<const DiagonalGmm> ubm);

 private:
  std::shared_ptr<const DiagonalGmm> ubm_;
  Eigen::MatrixXd t_;
  Eigen::MatrixXd t_inv_sigma_;
  Eigen::MatrixXd precision_blocks_;
};

// Gaussian posterior of the latent factor given one utterance's stats.
struct IvectorPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;  // I + sum_c N_c T_c^T Sigma_c^-1 T_c
  double log_det_precision = 0.0;
  Eigen::VectorXd linear;     // T^T Sigma^-1 F
};

IvectorPosterior ivector_posterior(const SufficientStats &stats,
                                   const TotalVariabilityModel &tv);

// Posterior mean of w. Throws UsageError when the stats came from another
// UBM and NumericError on non-finite stats. Empty stats yield w = 0 and a
// warning.
IVector extract_ivector(const SufficientStats &stats, const TotalVariabilityModel &tv,
                        const std::string &id = "");

// m + T w.
Eigen::VectorXd reconstruct_supervector(const TotalVariabilityModel &tv,
                                        const Eigen::VectorXd &w);

struct TvTrainConfig {
  int ivector_dim = 100;
  int em_iters = 5;
  std::uint64_t seed = 0;
  // Init entries are N(0,1) scaled by this times the mean UBM standard deviation.
  double init_scale = 0.001;
};

struct TvTrainResult {
  TotalVariabilityModel model;
  // Per iteration, evaluated before the M-step: sum over utterances of
  // 0.5 b^T L^-1 b - 0.5 log|L|, the marginal log-likelihood up to a constant.
  std::vector<double> objective;
  // Per iteration: count-weighted squared Mahalanobis error between the
  // utterance mean offsets F_c / N_c and T_c E[w], per unit count.
  std::vector<double> reconstruction_error;
};

TvTrainResult train_total_variability(const std::vector<SufficientStats> &stats,
                                      std::shared_ptr<const DiagonalGmm> ubm,
                                      const TvTrainConfig &cfg);

void write_ivectors_csv(const std::filesystem::path &path, const std::vector<IVector> &vs);
std::vector<IVector> read_ivectors_csv(const std::filesystem::path &path);

}  // namespace vqid

#endif  // VQID_IVECTOR_H_
