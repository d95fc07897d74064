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

#include "vqid/svm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "vqid/binary_io.h"
#include "vqid/error.h"
#include "vqid/log.h"
#include "vqid/parallel.h"

namespace vqid {

namespace {

constexpr double kTau = 1e-12;

}  // namespace

BinarySvm train_binary_svm(const Eigen::MatrixXd &x, const std::vector<int> &y,
                           const SvmTrainConfig &cfg) {
  const Eigen::Index n = x.rows();
  if (static_cast<std::size_t>(n) != y.size()) throw UsageError("SVM feature and label counts differ");
  if (!(cfg.complexity > 0.0)) throw UsageError("SVM complexity must be positive");
  if (!x.allFinite()) throw NumericError("SVM features contain non-finite values");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v != 1 && v != -1) throw UsageError("binary SVM labels must be +1 or -1");
    has_pos = has_pos || v == 1;
    has_neg = has_neg || v == -1;
  }
  if (!has_pos || !has_neg) throw DataError("binary SVM needs both classes");

  const double c = cfg.complexity;
  Eigen::VectorXd yd(n);
  for (Eigen::Index i = 0; i < n; ++i) yd(i) = y[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd k = x * x.transpose();
  const Eigen::MatrixXd q = yd.asDiagonal() * k * yd.asDiagonal();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = -Eigen::VectorXd::Ones(n);
  BinarySvm out;

  auto in_up = [&](Eigen::Index t) {
    return (yd(t) > 0 && alpha(t) < c) || (yd(t) < 0 && alpha(t) > 0);
  };
  auto in_low = [&](Eigen::Index t) {
    return (yd(t) > 0 && alpha(t) > 0) || (yd(t) < 0 && alpha(t) < c);
  };

  double objective = 0.0;
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    Eigen::Index i = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(t) && -yd(t) * grad(t) > gmax) {
        gmax = -yd(t) * grad(t);
        i = t;
      }
    }
    double gmin = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      double v = -yd(t) * grad(t);
      gmin = std::min(gmin, v);
      if (i < 0 || v >= gmax) continue;
      double b = gmax - v;
      double a = k(i, i) + k(t, t) - 2.0 * k(i, t);
      if (a <= 0) a = kTau;
      if (-b * b / a < best) {
        best = -b * b / a;
        j = t;
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < cfg.tol) {
      out.converged = true;
      break;
    }
    // Two-variable update on (i, j) keeping y'alpha fixed.
    const double old_ai = alpha(i), old_aj = alpha(j);
    double a = k(i, i) + k(j, j) - 2.0 * k(i, j);
    if (a <= 0) a = kTau;
    if (yd(i) != yd(j)) {
      double delta = (-grad(i) - grad(j)) / a;
      double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0 && alpha(j) < 0) {
        alpha(j) = 0;
        alpha(i) = diff;
      } else if (diff <= 0 && alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = -diff;
      }
      if (diff > 0 && alpha(i) > c) {
        alpha(i) = c;
        alpha(j) = c - diff;
      } else if (diff <= 0 && alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = c + diff;
      }
    } else {
      double delta = (grad(i) - grad(j)) / a;
      double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c && alpha(i) > c) {
        alpha(i) = c;
        alpha(j) = sum - c;
      } else if (sum <= c && alpha(j) < 0) {
        alpha(j) = 0;
        alpha(i) = sum;
      }
      if (sum > c && alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = sum - c;
      } else if (sum <= c && alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = sum;
      }
    }
    const double di = alpha(i) - old_ai, dj = alpha(j) - old_aj;
    grad += q.col(i) * di + q.col(j) * dj;
    objective = 0.5 * alpha.dot(grad - Eigen::VectorXd::Ones(n));
    out.dual_objective.push_back(objective);
    out.iterations = iter + 1;
  }
  if (!out.converged)
    log_warning("SVM solver stopped at " + std::to_string(cfg.max_iter) +
                " iterations before reaching tolerance");

  // Bias from free vectors, else the midpoint of the feasible interval.
  double sum_free = 0.0, ub = std::numeric_limits<double>::infinity(),
         lb = -std::numeric_limits<double>::infinity();
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    double yg = yd(t) * grad(t);
    if (alpha(t) >= c) {
      if (yd(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha(t) <= 0) {
      if (yd(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  out.b = -rho;
  out.w = x.transpose() * alpha.cwiseProduct(yd);
  return out;
}

LinearSvmModel train_linear_svm(const std::vector<Eigen::VectorXd> &x,
                                const std::vector<std::string> &labels,
                                const SvmTrainConfig &cfg, SvmMulticlass strategy) {
  if (x.size() != labels.size()) throw UsageError("SVM feature and label counts differ");
  if (x.empty()) throw DataError("SVM training needs data");
  const Eigen::Index d = x[0].size();
  for (const auto &v : x) {
    if (v.size() != d) throw UsageError("SVM features differ in dimension");
    if (!v.allFinite()) throw NumericError("SVM features contain non-finite values");
  }
  std::set<std::string> label_set(labels.begin(), labels.end());
  if (label_set.size() < 2) throw DataError("SVM training needs at least two classes");

  LinearSvmModel model;
  model.strategy = strategy;
  model.complexity = cfg.complexity;
  model.labels.assign(label_set.begin(), label_set.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < model.labels.size(); ++i)
    index[model.labels[i]] = static_cast<int>(i);
  std::vector<int> cls(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) cls[i] = index[labels[i]];

  const int k = static_cast<int>(model.labels.size());
  if (strategy == SvmMulticlass::kOneVsOne) {
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) model.machines.push_back({a, b, {}, 0.0});
  } else {
    for (int a = 0; a < k; ++a) model.machines.push_back({a, -1, {}, 0.0});
  }
  parallel_for(model.machines.size(), [&](std::size_t m) {
    LinearSvmModel::Machine &mc = model.machines[m];
    std::vector<std::size_t> rows;
    std::vector<int> y;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (cls[i] == mc.first) {
        rows.push_back(i);
        y.push_back(1);
      } else if (mc.second < 0 || cls[i] == mc.second) {
        rows.push_back(i);
        y.push_back(-1);
      }
    }
    Eigen::MatrixXd xm(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r)
      xm.row(static_cast<Eigen::Index>(r)) = x[rows[r]].transpose();
    BinarySvm svm = train_binary_svm(xm, y, cfg);
    mc.w = std::move(svm.w);
    mc.b = svm.b;
  });
  return model;
}

std::string svm_predict(const LinearSvmModel &model, const Eigen::VectorXd &x) {
  if (model.machines.empty()) throw UsageError("SVM model has no machines");
  if (x.size() != model.dim())
    throw UsageError("feature has dimension " + std::to_string(x.size()) + ", SVM expects " +
                     std::to_string(model.dim()));
  const std::size_t k = model.labels.size();
  if (model.strategy == SvmMulticlass::kOneVsRest) {
    std::size_t best = 0;
    double best_f = -std::numeric_limits<double>::infinity();
    for (const auto &mc : model.machines) {
      double f = mc.w.dot(x) + mc.b;
      if (f > best_f) {
        best_f = f;
        best = static_cast<std::size_t>(mc.first);
      }
    }
    return model.labels[best];
  }
  std::vector<int> votes(k, 0);
  std::vector<double> margin(k, 0.0);
  for (const auto &mc : model.machines) {
    double f = mc.w.dot(x) + mc.b;
    if (f > 0) ++votes[static_cast<std::size_t>(mc.first)];
    else ++votes[static_cast<std::size_t>(mc.second)];
    margin[static_cast<std::size_t>(mc.first)] += f;
    margin[static_cast<std::size_t>(mc.second)] -= f;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < k; ++i) {
    if (votes[i] > votes[best] || (votes[i] == votes[best] && margin[i] > margin[best]))
      best = i;
  }
  return model.labels[best];
}

void LinearSvmModel::save(const std::filesystem::path &path) const {
  BinaryWriter w(path, "VQSV", 1);
  w.u32(strategy == SvmMulticlass::kOneVsOne ? 0u : 1u);
  w.f64(complexity);
  w.u64(static_cast<std::uint64_t>(dim()));
  w.u64(labels.size());
  for (const auto &l : labels) w.str(l);
  w.u64(machines.size());
  for (const auto &m : machines) {
    w.u32(static_cast<std::uint32_t>(m.first));
    w.u32(m.second < 0 ? 0xffffffffu : static_cast<std::uint32_t>(m.second));
    w.vec(m.w);
    w.f64(m.b);
  }
  w.close();
}

LinearSvmModel LinearSvmModel::load(const std::filesystem::path &path) {
  BinaryReader r(path, "VQSV");
  if (r.version() != 1) throw DataError("unsupported VQSV version in " + path.string());
  LinearSvmModel m;
  std::uint32_t s = r.u32();
  if (s > 1) throw DataError("unknown SVM strategy in " + path.string());
  m.strategy = s == 0 ? SvmMulticlass::kOneVsOne : SvmMulticlass::kOneVsRest;
  m.complexity = r.f64();
  std::uint64_t d = r.u64(), nl = r.u64();
  if (d == 0 || d > 100000 || nl < 2 || nl > 100000)
    throw DataError("implausible SVM dimensions in " + path.string());
  for (std::uint64_t i = 0; i < nl; ++i) m.labels.push_back(r.str());
  std::uint64_t nm = r.u64();
  if (nm > nl * nl) throw DataError("implausible SVM machine count in " + path.string());
  for (std::uint64_t i = 0; i < nm; ++i) {
    Machine mc;
    std::uint32_t a = r.u32(), b = r.u32();
    if (a >= nl || (b != 0xffffffffu && b >= nl))
      throw DataError("SVM machine references an unknown label in " + path.string());
    mc.first = static_cast<int>(a);
    mc.second = b == 0xffffffffu ? -1 : static_cast<int>(b);
    mc.w = r.vec(static_cast<Eigen::Index>(d));
    mc.b = r.f64();
    m.machines.push_back(std::move(mc));
  }
  r.expect_end();
  return m;
}

}  // namespace vqid
