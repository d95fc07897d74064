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

#ifndef VQID_PLDA_H_
#define VQID_PLDA_H_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace vqid {

// Two-covariance model: class variable y ~ N(mu, phi_b), sample x = y + e
// with e ~ N(0, phi_w).
struct PldaModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd phi_b;  // between-class, PSD
  Eigen::MatrixXd phi_w;  // within-class, PD

  Eigen::Index dim() const { return mu.size(); }
  void validate() const;
  void save(const std::filesystem::path &path) const;
  static PldaModel load(const std::filesystem::path &path);
};

struct PldaTrainResult {
  PldaModel model;
  // Marginal log-likelihood of the training data under the model entering
  // each EM iteration, plus one final value for the returned model.
  std::vector<double> log_likelihood;
};

// Throws DataError when there are fewer than two classes, when no class has
// two samples or when all vectors coincide.
PldaTrainResult train_plda(const std::vector<Eigen::VectorXd> &x,
                           const std::vector<std::string> &labels, int em_iters);

// Exact log p(X_k) for one class's samples under the model.
double plda_class_log_likelihood(const PldaModel &model,
                                 const std::vector<Eigen::VectorXd> &samples);

struct ClassEnrollment {
  std::string label;
  std::vector<Eigen::VectorXd> vectors;
};

enum class PldaScoring { kPooled, kSegmentMax };

struct PldaDecision {
  std::string label;
  std::vector<std::string> labels;  // lexicographic order
  std::vector<double> scores;       // aligned with labels
};

// Scores test vectors against enrolled classes. Each pooled class score is
// log N(x; y_k, C_k + phi_w) - log N(x; mu, phi_b + phi_w), with (y_k, C_k)
// the posterior of the class variable given all enrollment vectors. The
// segment-max mode scores every enrollment vector alone and keeps the best.
class PldaScorer {
 public:
  PldaScorer(const PldaModel &model, std::vector<ClassEnrollment> enrollments,
             PldaScoring mode = PldaScoring::kPooled);

  const std::vector<std::string> &labels() const { return labels_; }
  std::vector<double> scores(const Eigen::VectorXd &x) const;
  // Highest score wins; ties go to the lexicographically first label.
  PldaDecision classify(const Eigen::VectorXd &x) const;

 private:
  struct Predictive {
    Eigen::VectorXd mean;
    Eigen::LLT<Eigen::MatrixXd> chol;
    double log_det = 0.0;
  };
  static Predictive make_predictive(const Eigen::VectorXd &mean, const Eigen::MatrixXd &cov);
  static double log_density(const Predictive &p, const Eigen::VectorXd &x);
  Predictive enrolled_predictive(const PldaModel &model,
                                 const std::vector<Eigen::VectorXd> &vectors) const;

  Eigen::Index dim_ = 0;
  PldaScoring mode_;
  std::vector<std::string> labels_;
  std::vector<std::vector<Predictive>> classes_;  // one entry when pooled
  Predictive background_;
};

}  // namespace vqid

#endif  // VQID_PLDA_H_
