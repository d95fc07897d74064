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

#include "vqid/ivector.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "vqid/binary_io.h"
#include "vqid/error.h"
#include "vqid/log.h"
#include "vqid/parallel.h"

namespace vqid {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Stacks C x F centred stats component-major into one C*F vector.
Eigen::VectorXd flatten_first(const Eigen::MatrixXd &first) {
  RowMatrix rm = first;
  return Eigen::Map<const Eigen::VectorXd>(rm.data(), rm.size());
}

void check_stats(const SufficientStats &stats, const TotalVariabilityModel &tv) {
  const DiagonalGmm &ubm = tv.ubm();
  if (stats.zeroth.size() != ubm.components() || stats.first.rows() != ubm.components() ||
      stats.first.cols() != ubm.dim())
    throw UsageError("sufficient stats shape does not match the UBM");
  if (stats.ubm_fingerprint != ubm.fingerprint())
    throw UsageError("sufficient stats were accumulated against a different UBM");
  if (!stats.zeroth.allFinite() || !stats.first.allFinite())
    throw NumericError("sufficient stats contain non-finite values");
  if ((stats.zeroth.array() < 0).any())
    throw NumericError("zeroth-order stats must be non-negative");
}

}  // namespace

const char *stage_name(IvectorStage stage) {
  switch (stage) {
    case IvectorStage::kRaw: return "raw";
    case IvectorStage::kLda: return "lda";
    case IvectorStage::kCentered: return "centered";
    case IvectorStage::kLengthNormalized: return "length-normalized";
  }
  return "raw";
}

IvectorStage parse_stage(const std::string &name) {
  for (IvectorStage s : {IvectorStage::kRaw, IvectorStage::kLda, IvectorStage::kCentered,
                         IvectorStage::kLengthNormalized})
    if (name == stage_name(s)) return s;
  throw DataError("unknown i-vector stage '" + name + "'");
}

void advance_stage(IVector &v, IvectorStage next) {
  if (static_cast<int>(next) <= static_cast<int>(v.stage))
    throw UsageError(std::string("i-vector stage cannot move from ") + stage_name(v.stage) +
                     " to " + stage_name(next));
  v.stage = next;
}

TotalVariabilityModel::TotalVariabilityModel(std::shared_ptr<const DiagonalGmm> ubm,
                                             Eigen::MatrixXd t)
    : ubm_(std::move(ubm)), t_(std::move(t)) {
  if (!ubm_) throw UsageError("total variability model needs a UBM");
  const Eigen::Index c = ubm_->components(), f = ubm_->dim(), m = t_.cols();
  if (t_.rows() != c * f)
    throw UsageError("T has " + std::to_string(t_.rows()) + " rows, UBM supervector has " +
                     std::to_string(c * f));
  if (m < 1) throw UsageError("i-vector dimension must be positive");
  if (!t_.allFinite()) throw NumericError("T contains non-finite values");
  t_inv_sigma_.resize(c * f, m);
  precision_blocks_.resize(m * m, c);
  for (Eigen::Index k = 0; k < c; ++k) {
    auto tk = t_.middleRows(k * f, f);
    Eigen::VectorXd inv_var = ubm_->variances().row(k).transpose().cwiseInverse();
    t_inv_sigma_.middleRows(k * f, f) = inv_var.asDiagonal() * tk;
    Eigen::MatrixXd p = tk.transpose() * t_inv_sigma_.middleRows(k * f, f);
    precision_blocks_.col(k) = Eigen::Map<const Eigen::VectorXd>(p.data(), m * m);
  }
}

void TotalVariabilityModel::save(const std::filesystem::path &path) const {
  BinaryWriter w(path, "VQTV", 1);
  w.u64(static_cast<std::uint64_t>(ubm_->components()));
  w.u64(static_cast<std::uint64_t>(ubm_->dim()));
  w.u64(static_cast<std::uint64_t>(t_.cols()));
  w.u64(ubm_->fingerprint());
  w.mat_row_major(t_);
  w.close();
}

TotalVariabilityModel TotalVariabilityModel::load(const std::filesystem::path &path,
                                                  std::shared_ptr<const DiagonalGmm> ubm) {
  if (!ubm) throw UsageError("loading T requires its UBM");
  BinaryReader r(path, "VQTV");
  if (r.version() != 1) throw DataError("unsupported VQTV version in " + path.string());
  std::uint64_t c = r.u64(), f = r.u64(), m = r.u64(), fp = r.u64();
  if (c != static_cast<std::uint64_t>(ubm->components()) ||
      f != static_cast<std::uint64_t>(ubm->dim()) || fp != ubm->fingerprint())
    throw DataError("T in " + path.string() + " was trained against a different UBM");
  if (m == 0 || m > c * f) throw DataError("implausible i-vector dimension in " + path.string());
  Eigen::MatrixXd t = r.mat_row_major(static_cast<Eigen::Index>(c * f), static_cast<Eigen::Index>(m));
  r.expect_end();
  return TotalVariabilityModel(std::move(ubm), std::move(t));
}

IvectorPosterior ivector_posterior(const SufficientStats &stats,
                                   const TotalVariabilityModel &tv) {
  check_stats(stats, tv);
  const Eigen::Index m = tv.ivector_dim();
  IvectorPosterior post;
  Eigen::VectorXd flat = tv.precision_blocks() * stats.zeroth;
  post.precision = Eigen::Map<const Eigen::MatrixXd>(flat.data(), m, m);
  post.precision.diagonal().array() += 1.0;
  post.linear = tv.t_inv_sigma().transpose() * flatten_first(stats.first);
  Eigen::LLT<Eigen::MatrixXd> llt(post.precision);
  if (llt.info() != Eigen::Success)
    throw NumericError("i-vector precision matrix is not positive definite");
  post.mean = llt.solve(post.linear);
  post.log_det_precision = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  if (!post.mean.allFinite()) throw NumericError("i-vector solve produced non-finite values");
  return post;
}

IVector extract_ivector(const SufficientStats &stats, const TotalVariabilityModel &tv,
                        const std::string &id) {
  check_stats(stats, tv);
  IVector out;
  out.id = id;
  out.stage = IvectorStage::kRaw;
  if (stats.zeroth.sum() <= 0.0) {
    log_warning("utterance '" + id + "' has no frames; i-vector set to the prior mean");
    out.w = Eigen::VectorXd::Zero(tv.ivector_dim());
    return out;
  }
  out.w = ivector_posterior(stats, tv).mean;
  return out;
}

Eigen::VectorXd reconstruct_supervector(const TotalVariabilityModel &tv,
                                        const Eigen::VectorXd &w) {
  if (w.size() != tv.ivector_dim())
    throw UsageError("i-vector has dimension " + std::to_string(w.size()) + ", model expects " +
                     std::to_string(tv.ivector_dim()));
  return tv.ubm().supervector() + tv.t() * w;
}

TvTrainResult train_total_variability(const std::vector<SufficientStats> &stats,
                                      std::shared_ptr<const DiagonalGmm> ubm,
                                      const TvTrainConfig &cfg) {
  if (!ubm) throw UsageError("T training needs a UBM");
  if (stats.empty()) throw DataError("T training needs at least one utterance");
  const Eigen::Index c = ubm->components(), f = ubm->dim(), cf = c * f;
  const Eigen::Index m = cfg.ivector_dim;
  if (m < 1) throw UsageError("i-vector dimension must be positive");
  if (m > cf)
    throw UsageError("i-vector dimension " + std::to_string(m) + " exceeds supervector size " +
                     std::to_string(cf));
  if (cfg.em_iters < 1) throw UsageError("T training needs at least one EM iteration");
  const Eigen::Index u = static_cast<Eigen::Index>(stats.size());
  if (u < m)
    log_warning("T training with " + std::to_string(u) + " utterances for " +
                std::to_string(m) + " dimensions");

  Eigen::MatrixXd zeroth(u, c), first(cf, u);
  for (Eigen::Index i = 0; i < u; ++i) {
    const SufficientStats &s = stats[static_cast<std::size_t>(i)];
    if (s.zeroth.size() != c || s.first.rows() != c || s.first.cols() != f)
      throw UsageError("sufficient stats shape does not match the UBM");
    if (s.ubm_fingerprint != ubm->fingerprint())
      throw UsageError("sufficient stats were accumulated against a different UBM");
    if (!s.zeroth.allFinite() || !s.first.allFinite())
      throw NumericError("sufficient stats contain non-finite values");
    zeroth.row(i) = s.zeroth.transpose();
    first.col(i) = flatten_first(s.first);
  }
  Eigen::VectorXd inv_var(cf);
  for (Eigen::Index k = 0; k < c; ++k)
    inv_var.segment(k * f, f) = ubm->variances().row(k).transpose().cwiseInverse();

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = cfg.init_scale * ubm->variances().array().sqrt().mean();
  Eigen::MatrixXd t(cf, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < cf; ++i) t(i, j) = scale * gauss(rng);

  TvTrainResult result;
  for (int it = 0; it < cfg.em_iters; ++it) {
    TotalVariabilityModel model(ubm, t);
    Eigen::MatrixXd ew(u, m), eww(m * m, u);
    std::vector<double> obj(static_cast<std::size_t>(u)), err(static_cast<std::size_t>(u));
    parallel_for(static_cast<std::size_t>(u), [&](std::size_t idx) {
      const Eigen::Index i = static_cast<Eigen::Index>(idx);
      const SufficientStats &s = stats[idx];
      IvectorPosterior post = ivector_posterior(s, model);
      Eigen::LLT<Eigen::MatrixXd> llt(post.precision);
      Eigen::MatrixXd second = llt.solve(Eigen::MatrixXd::Identity(m, m));
      second.noalias() += post.mean * post.mean.transpose();
      ew.row(i) = post.mean.transpose();
      eww.col(i) = Eigen::Map<const Eigen::VectorXd>(second.data(), m * m);
      obj[idx] = 0.5 * post.linear.dot(post.mean) - 0.5 * post.log_det_precision;
      Eigen::VectorXd tw = t * post.mean;
      double e = 0.0;
      for (Eigen::Index k = 0; k < c; ++k) {
        double nk = s.zeroth(k);
        if (nk <= 1e-10) continue;
        auto r = first.col(i).segment(k * f, f) - nk * tw.segment(k * f, f);
        e += r.cwiseAbs2().dot(inv_var.segment(k * f, f)) / nk;
      }
      err[idx] = e;
    });
    double total_obj = 0.0, total_err = 0.0;
    for (Eigen::Index i = 0; i < u; ++i) {
      total_obj += obj[static_cast<std::size_t>(i)];
      total_err += err[static_cast<std::size_t>(i)];
    }
    result.objective.push_back(total_obj);
    result.reconstruction_error.push_back(total_err / zeroth.sum());
    log_info("tv iter " + std::to_string(it) + " objective " + std::to_string(total_obj) +
             " recon_error " + std::to_string(result.reconstruction_error.back()));

    // M-step: T_c = C_c A_c^-1 per component.
    Eigen::MatrixXd acc_c = first * ew;      // CF x M
    Eigen::MatrixXd acc_a = eww * zeroth;    // M*M x C
    parallel_for(static_cast<std::size_t>(c), [&](std::size_t idx) {
      const Eigen::Index k = static_cast<Eigen::Index>(idx);
      Eigen::Map<const Eigen::MatrixXd> a(acc_a.col(k).data(), m, m);
      Eigen::MatrixXd a_sym = 0.5 * (a + a.transpose());
      Eigen::LDLT<Eigen::MatrixXd> ldlt(a_sym);
      if (ldlt.info() != Eigen::Success || zeroth.col(k).sum() <= 1e-10) return;
      t.middleRows(k * f, f) = ldlt.solve(acc_c.middleRows(k * f, f).transpose()).transpose();
    });
    if (!t.allFinite()) throw NumericError("T became non-finite during EM");
  }
  result.model = TotalVariabilityModel(ubm, t);
  return result;
}

void write_ivectors_csv(const std::filesystem::path &path, const std::vector<IVector> &vs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const Eigen::Index m = vs.empty() ? 0 : vs[0].w.size();
  out << "id,stage";
  for (Eigen::Index j = 0; j < m; ++j) out << ",w" << j;
  out << '\n';
  char buf[32];
  for (const IVector &v : vs) {
    if (v.w.size() != m) throw UsageError("i-vector set mixes dimensions");
    if (v.id.find_first_of(",\n") != std::string::npos)
      throw UsageError("i-vector id contains a delimiter: " + v.id);
    out << v.id << ',' << stage_name(v.stage);
    for (Eigen::Index j = 0; j < m; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", v.w(j));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<IVector> read_ivectors_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty i-vector file " + path.string());
  std::vector<IVector> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    IVector v;
    std::getline(ss, v.id, ',');
    std::getline(ss, field, ',');
    v.stage = parse_stage(field);
    std::vector<double> vals;
    while (std::getline(ss, field, ',')) {
      try {
        vals.push_back(std::stod(field));
      } catch (const std::exception &) {
        throw DataError("bad number '" + field + "' in " + path.string());
      }
    }
    v.w = Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    if (!out.empty() && v.w.size() != out[0].w.size())
      throw DataError("ragged i-vector rows in " + path.string());
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace vqid
