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

#ifndef VQID_SVM_H_
#define VQID_SVM_H_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace vqid {

struct SvmTrainConfig {
  double complexity = 1.0;
  double tol = 1e-6;
  int max_iter = 10000;
};

// Soft-margin linear SVM, f(x) = w.x + b, positive side = `positive` label.
struct BinarySvm {
  Eigen::VectorXd w;
  double b = 0.0;
  int iterations = 0;
  bool converged = false;
  // Dual objective 0.5 a'Qa - e'a after each solver step.
  std::vector<double> dual_objective;

  double decision(const Eigen::VectorXd &x) const { return w.dot(x) + b; }
};

// SMO with second-order working-set selection. x: n x d rows, y in {-1, +1}.
BinarySvm train_binary_svm(const Eigen::MatrixXd &x, const std::vector<int> &y,
                           const SvmTrainConfig &cfg);

enum class SvmMulticlass { kOneVsOne, kOneVsRest };

struct LinearSvmModel {
  SvmMulticlass strategy = SvmMulticlass::kOneVsOne;
  double complexity = 1.0;
  std::vector<std::string> labels;  // lexicographic order
  // One-vs-one: one machine per pair (first, second) with first < second,
  // positive side = first. One-vs-rest: one machine per label.
  struct Machine {
    int first = 0, second = -1;
    Eigen::VectorXd w;
    double b = 0.0;
  };
  std::vector<Machine> machines;

  Eigen::Index dim() const { return machines.empty() ? 0 : machines[0].w.size(); }
  void save(const std::filesystem::path &path) const;
  static LinearSvmModel load(const std::filesystem::path &path);
};

// Throws DataError on a single class, NumericError on non-finite features.
LinearSvmModel train_linear_svm(const std::vector<Eigen::VectorXd> &x,
                                const std::vector<std::string> &labels,
                                const SvmTrainConfig &cfg = {},
                                SvmMulticlass strategy = SvmMulticlass::kOneVsOne);

// One-vs-one: most pairwise votes, then largest summed margin, then
// lexicographic label. One-vs-rest: largest decision value, then label.
std::string svm_predict(const LinearSvmModel &model, const Eigen::VectorXd &x);

}  // namespace vqid

#endif  // VQID_SVM_H_
