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

#include "vqid/gmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "vqid/binary_io.h"
#include "vqid/config.h"
#include "vqid/error.h"
#include "vqid/parallel.h"

namespace vqid {

namespace {

constexpr Eigen::Index kChunkFrames = 4096;

std::uint64_t hash_doubles(const double *p, Eigen::Index n, std::uint64_t seed) {
  return fnv1a64(std::string(reinterpret_cast<const char *>(p),
                             static_cast<std::size_t>(n) * sizeof(double)),
                 seed);
}

// Row-wise log-sum-exp; converts `logp` to posteriors in place.
Eigen::VectorXd normalize_rows(Eigen::MatrixXd &logp) {
  Eigen::VectorXd lse(logp.rows());
  for (Eigen::Index t = 0; t < logp.rows(); ++t) {
    double mx = logp.row(t).maxCoeff();
    double s = (logp.row(t).array() - mx).exp().sum();
    lse(t) = mx + std::log(s);
    logp.row(t) = (logp.row(t).array() - lse(t)).exp();
  }
  return lse;
}

void check_finite(const Eigen::MatrixXd &m, const char *what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + " contains non-finite values");
}

}  // namespace

DiagonalGmm::DiagonalGmm(Eigen::VectorXd weights, Eigen::MatrixXd means,
                         Eigen::MatrixXd variances)
    : weights_(std::move(weights)),
      means_(std::move(means)),
      variances_(std::move(variances)) {
  const Eigen::Index c = weights_.size();
  if (c < 1) throw UsageError("GMM needs at least one component");
  if (means_.rows() != c || variances_.rows() != c ||
      means_.cols() != variances_.cols() || means_.cols() < 1)
    throw UsageError("GMM parameter shapes disagree");
  if (!weights_.allFinite() || (weights_.array() < 0).any() ||
      std::abs(weights_.sum() - 1.0) > 1e-10)
    throw UsageError("GMM weights must be non-negative and sum to 1");
  if (!means_.allFinite() || !variances_.allFinite() ||
      (variances_.array() <= 0).any())
    throw UsageError("GMM means must be finite and variances positive");
  const double f = static_cast<double>(means_.cols());
  inv_var_ = variances_.cwiseInverse();
  mean_inv_var_ = means_.cwiseProduct(inv_var_);
  log_const_.resize(c);
  for (Eigen::Index i = 0; i < c; ++i) {
    log_const_(i) = std::log(weights_(i)) -
                    0.5 * (f * std::log(2.0 * std::numbers::pi) +
                           variances_.row(i).array().log().sum() +
                           means_.row(i).dot(mean_inv_var_.row(i)));
  }
  std::uint64_t h = hash_doubles(weights_.data(), weights_.size(), 14695981039346656037ull);
  h = hash_doubles(means_.data(), means_.size(), h);
  fingerprint_ = hash_doubles(variances_.data(), variances_.size(), h);
}

Eigen::MatrixXd DiagonalGmm::weighted_log_densities(const Eigen::MatrixXd &frames) const {
  if (frames.cols() != dim())
    throw UsageError("frame dimension " + std::to_string(frames.cols()) +
                     " does not match GMM dimension " + std::to_string(dim()));
  Eigen::MatrixXd out = frames * mean_inv_var_.transpose();
  out.noalias() -= 0.5 * frames.cwiseAbs2() * inv_var_.transpose();
  out.rowwise() += log_const_.transpose();
  return out;
}

double DiagonalGmm::log_likelihood(const Eigen::VectorXd &frame) const {
  Eigen::MatrixXd l = weighted_log_densities(frame.transpose());
  double mx = l.maxCoeff();
  return mx + std::log((l.array() - mx).exp().sum());
}

Eigen::VectorXd DiagonalGmm::supervector() const {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = means_;
  return Eigen::Map<const Eigen::VectorXd>(rm.data(), rm.size());
}

void DiagonalGmm::save(const std::filesystem::path &path) const {
  BinaryWriter w(path, "VQGM", 1);
  w.u64(static_cast<std::uint64_t>(components()));
  w.u64(static_cast<std::uint64_t>(dim()));
  w.vec(weights_);
  w.mat_row_major(means_);
  w.mat_row_major(variances_);
  w.close();
}

DiagonalGmm DiagonalGmm::load(const std::filesystem::path &path) {
  BinaryReader r(path, "VQGM");
  if (r.version() != 1) throw DataError("unsupported VQGM version in " + path.string());
  std::uint64_t c = r.u64(), f = r.u64();
  if (c == 0 || f == 0 || c > 65536 || f > 4096)
    throw DataError("implausible GMM dimensions in " + path.string());
  Eigen::VectorXd w = r.vec(static_cast<Eigen::Index>(c));
  Eigen::MatrixXd m = r.mat_row_major(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(f));
  Eigen::MatrixXd v = r.mat_row_major(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(f));
  r.expect_end();
  return DiagonalGmm(std::move(w), std::move(m), std::move(v));
}

Eigen::VectorXd frame_posteriors(const DiagonalGmm &gmm, const Eigen::VectorXd &frame) {
  if (frame.size() != gmm.dim())
    throw UsageError("frame dimension " + std::to_string(frame.size()) +
                     " does not match GMM dimension " + std::to_string(gmm.dim()));
  const Eigen::Index c = gmm.components();
  Eigen::VectorXd logp(c);
  const double f = static_cast<double>(gmm.dim());
  for (Eigen::Index i = 0; i < c; ++i) {
    auto diff = frame.transpose() - gmm.means().row(i);
    logp(i) = std::log(gmm.weights()(i)) -
              0.5 * (f * std::log(2.0 * std::numbers::pi) +
                     gmm.variances().row(i).array().log().sum() +
                     (diff.array().square() / gmm.variances().row(i).array()).sum());
  }
  double mx = logp.maxCoeff();
  Eigen::VectorXd p = (logp.array() - mx).exp();
  return p / p.sum();
}

SufficientStats &SufficientStats::operator+=(const SufficientStats &other) {
  if (zeroth.size() == 0) {
    *this = other;
    return *this;
  }
  if (other.zeroth.size() != zeroth.size() || other.first.cols() != first.cols())
    throw UsageError("cannot add sufficient stats of different shapes");
  if (other.ubm_fingerprint != ubm_fingerprint)
    throw UsageError("cannot add sufficient stats from different UBMs");
  zeroth += other.zeroth;
  first += other.first;
  frames += other.frames;
  return *this;
}

SufficientStats accumulate_stats(const DiagonalGmm &gmm, const Eigen::MatrixXd &frames) {
  if (frames.cols() != gmm.dim())
    throw UsageError("feature dimension " + std::to_string(frames.cols()) +
                     " does not match UBM dimension " + std::to_string(gmm.dim()));
  check_finite(frames, "features");
  SufficientStats s;
  s.zeroth = Eigen::VectorXd::Zero(gmm.components());
  Eigen::MatrixXd raw_first = Eigen::MatrixXd::Zero(gmm.components(), gmm.dim());
  for (Eigen::Index start = 0; start < frames.rows(); start += kChunkFrames) {
    Eigen::Index n = std::min(kChunkFrames, frames.rows() - start);
    auto block = frames.middleRows(start, n);
    Eigen::MatrixXd post = gmm.weighted_log_densities(block);
    normalize_rows(post);
    s.zeroth += post.colwise().sum().transpose();
    raw_first.noalias() += post.transpose() * block;
  }
  s.first = raw_first - gmm.means().cwiseProduct(s.zeroth.replicate(1, gmm.dim()));
  s.frames = static_cast<double>(frames.rows());
  s.ubm_fingerprint = gmm.fingerprint();
  return s;
}

SufficientStats accumulate_stats(const DiagonalGmm &gmm, const FeatureMatrix &feat) {
  return accumulate_stats(gmm, feat.values);
}

namespace {

struct EmAccumulator {
  Eigen::VectorXd n;
  Eigen::MatrixXd s1, s2;
  double loglik = 0.0;
};

EmAccumulator e_step(const DiagonalGmm &gmm, const Eigen::MatrixXd &frames) {
  const Eigen::Index chunks = (frames.rows() + kChunkFrames - 1) / kChunkFrames;
  std::vector<EmAccumulator> parts(static_cast<std::size_t>(chunks));
  parallel_for(parts.size(), [&](std::size_t i) {
    Eigen::Index start = static_cast<Eigen::Index>(i) * kChunkFrames;
    Eigen::Index n = std::min(kChunkFrames, frames.rows() - start);
    auto block = frames.middleRows(start, n);
    Eigen::MatrixXd post = gmm.weighted_log_densities(block);
    Eigen::VectorXd lse = normalize_rows(post);
    EmAccumulator &a = parts[i];
    a.loglik = lse.sum();
    a.n = post.colwise().sum().transpose();
    a.s1.noalias() = post.transpose() * block;
    a.s2.noalias() = post.transpose() * block.cwiseAbs2();
  });
  EmAccumulator total = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) {
    total.n += parts[i].n;
    total.s1 += parts[i].s1;
    total.s2 += parts[i].s2;
    total.loglik += parts[i].loglik;
  }
  return total;
}

}  // namespace

UbmTrainResult train_ubm(const Eigen::MatrixXd &frames, const UbmTrainConfig &cfg) {
  const Eigen::Index c = cfg.components, t = frames.rows(), f = frames.cols();
  if (c < 1) throw UsageError("UBM needs at least one component");
  if (cfg.em_iters < 1) throw UsageError("em_iters must be >= 1");
  if (f < 1) throw DataError("UBM training features have no dimensions");
  if (t < 10 * c)
    throw DataError("UBM training needs at least " + std::to_string(10 * c) +
                    " frames for " + std::to_string(c) + " components, got " +
                    std::to_string(t));
  check_finite(frames, "UBM training features");

  const Eigen::RowVectorXd global_mean = frames.colwise().mean();
  const Eigen::RowVectorXd global_var =
      (frames.rowwise() - global_mean).colwise().squaredNorm() / static_cast<double>(t);
  const Eigen::RowVectorXd var_floor =
      (cfg.var_floor_rel * global_var).cwiseMax(std::numeric_limits<double>::min());

  // k-means++ seeding on a seeded subsample.
  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> sample(static_cast<std::size_t>(t));
  for (Eigen::Index i = 0; i < t; ++i) sample[i] = i;
  if (static_cast<std::size_t>(t) > cfg.kmeans_sample) {
    std::shuffle(sample.begin(), sample.end(), rng);
    sample.resize(cfg.kmeans_sample);
    std::sort(sample.begin(), sample.end());
  }
  const std::size_t ns = sample.size();
  Eigen::MatrixXd centers(c, f);
  std::vector<double> d2(ns, std::numeric_limits<double>::infinity());
  std::uniform_int_distribution<std::size_t> pick(0, ns - 1);
  std::size_t first = pick(rng);
  centers.row(0) = frames.row(sample[first]);
  for (Eigen::Index k = 1; k <= c; ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
      d2[i] = std::min(d2[i], (frames.row(sample[i]) - centers.row(k - 1)).squaredNorm());
      total += d2[i];
    }
    if (k == c) break;
    std::size_t chosen = pick(rng);
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(rng), acc = 0.0;
      for (std::size_t i = 0; i < ns; ++i) {
        acc += d2[i];
        if (acc >= target && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.row(k) = frames.row(sample[chosen]);
  }

  // Hard assignment of every frame to its nearest seed.
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(c);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(c, f), sumsq = Eigen::MatrixXd::Zero(c, f);
  const Eigen::VectorXd center_norm = centers.rowwise().squaredNorm();
  for (Eigen::Index start = 0; start < t; start += kChunkFrames) {
    Eigen::Index n = std::min(kChunkFrames, t - start);
    auto block = frames.middleRows(start, n);
    Eigen::MatrixXd dist = -2.0 * block * centers.transpose();
    dist.rowwise() += center_norm.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best;
      dist.row(i).minCoeff(&best);
      counts(best) += 1.0;
      sum.row(best) += block.row(i);
      sumsq.row(best) += block.row(i).cwiseAbs2();
    }
  }
  Eigen::VectorXd weights(c);
  Eigen::MatrixXd means(c, f), vars(c, f);
  for (Eigen::Index k = 0; k < c; ++k) {
    if (counts(k) >= 2.0) {
      means.row(k) = sum.row(k) / counts(k);
      vars.row(k) = (sumsq.row(k) / counts(k) - means.row(k).cwiseAbs2()).cwiseMax(var_floor);
    } else {
      means.row(k) = centers.row(k);
      vars.row(k) = global_var.cwiseMax(var_floor);
    }
    weights(k) = std::max(counts(k), 1.0);
  }
  weights /= weights.sum();

  UbmTrainResult result;
  DiagonalGmm gmm(weights, means, vars);
  for (int it = 0; it < cfg.em_iters; ++it) {
    EmAccumulator acc = e_step(gmm, frames);
    double avg = acc.loglik / static_cast<double>(t);
    if (!std::isfinite(avg)) throw NumericError("UBM log-likelihood is not finite");
    if (!result.avg_log_likelihood.empty()) {
      double prev = result.avg_log_likelihood.back();
      if (avg - prev < cfg.tol * std::abs(prev)) {
        result.avg_log_likelihood.push_back(avg);
        break;
      }
    }
    result.avg_log_likelihood.push_back(avg);
    for (Eigen::Index k = 0; k < c; ++k) {
      double nk = acc.n(k);
      weights(k) = nk / static_cast<double>(t);
      if (nk > 1e-10) {
        means.row(k) = acc.s1.row(k) / nk;
        vars.row(k) = (acc.s2.row(k) / nk - means.row(k).cwiseAbs2()).cwiseMax(var_floor);
      }
      weights(k) = std::max(weights(k), 1e-300);
    }
    weights /= weights.sum();
    gmm = DiagonalGmm(weights, means, vars);
  }
  result.gmm = gmm;
  return result;
}

UbmTrainResult train_ubm(const std::vector<FeatureMatrix> &features,
                         const UbmTrainConfig &cfg) {
  Eigen::Index rows = 0, cols = features.empty() ? 0 : features[0].cols();
  for (const auto &fm : features) {
    if (fm.cols() != cols) throw UsageError("feature matrices differ in dimension");
    rows += fm.rows();
  }
  Eigen::MatrixXd all(rows, cols);
  Eigen::Index at = 0;
  for (const auto &fm : features) {
    all.middleRows(at, fm.rows()) = fm.values;
    at += fm.rows();
  }
  return train_ubm(all, cfg);
}

}  // namespace vqid
