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

#include "vqid/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "vqid/binary_io.h"
#include "vqid/error.h"
#include "vqid/log.h"
#include "vqid/parallel.h"
#include "vqid/plot.h"

namespace vqid {

namespace {

const std::set<std::string> &known_keys() {
  static const std::set<std::string> keys = {
      "mfcc_frame_length_ms", "mfcc_frame_shift_ms", "mfcc_num_ceps", "mfcc_num_filters",
      "mfcc_fft_size", "mfcc_preemphasis", "mfcc_delta_window", "mfcc_energy_floor",
      "mfcc_use_log_energy", "mfcc_low_freq_hz", "mfcc_high_freq_hz",
      "cmvn_normalize_variance", "f0_min_hz", "f0_max_hz", "f0_hop_ms", "voicing_threshold",
      "silence_threshold", "octave_cost", "octave_jump_cost", "voiced_unvoiced_cost",
      "max_pitch_candidates", "cpp_frame_ms", "cpp_time_smooth", "cpp_quef_smooth",
      "lh_cutoff_hz", "ps_hop_ms", "ps_erb_step", "ps_candidate_step_oct",
      "csid_coefficients", "trim_s", "segment_s", "max_segments", "allow_short_recordings", "n_train",
      "test_lengths", "ubm_components", "ubm_em_iters", "ubm_tol", "ubm_var_floor",
      "ubm_max_frames", "ubm_kmeans_sample", "ivector_dim", "tv_em_iters", "tv_init_scale",
      "lda_dim", "plda_em_iters", "plda_scoring", "svm_complexity", "svm_tol",
      "svm_max_iter", "svm_multiclass", "classifier", "baseline", "seed", "threads",
      "verbosity", "manifest", "output_dir"};
  return keys;
}

int positive_int(const Config &c, const std::string &key, long fallback) {
  long v = c.get_int(key, fallback);
  if (v < 1 || v > 1000000000L) throw UsageError(key + " must be a positive integer");
  return static_cast<int>(v);
}

std::uint64_t derive_seed(std::uint64_t seed, const char *stage) {
  return fnv1a64(stage, seed * 0x9E3779B97F4A7C15ull + 1);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

PipelineConfig PipelineConfig::from_config(const Config &c, const std::filesystem::path &base_dir) {
  for (const auto &[key, value] : c.entries())
    if (!known_keys().count(key)) throw UsageError("unknown config key '" + key + "'");
  PipelineConfig p;
  MfccConfig &m = p.mfcc;
  m.frame_len_ms = c.get_double("mfcc_frame_length_ms", m.frame_len_ms);
  m.hop_ms = c.get_double("mfcc_frame_shift_ms", m.hop_ms);
  m.n_mfcc = positive_int(c, "mfcc_num_ceps", m.n_mfcc);
  m.n_mel_filters = positive_int(c, "mfcc_num_filters", m.n_mel_filters);
  m.fft_size = static_cast<int>(c.get_int("mfcc_fft_size", m.fft_size));
  m.pre_emphasis = c.get_double("mfcc_preemphasis", m.pre_emphasis);
  m.delta_window = positive_int(c, "mfcc_delta_window", m.delta_window);
  m.energy_floor = c.get_double("mfcc_energy_floor", m.energy_floor);
  m.use_log_energy = c.get_bool("mfcc_use_log_energy", m.use_log_energy);
  m.low_freq_hz = c.get_double("mfcc_low_freq_hz", m.low_freq_hz);
  m.high_freq_hz = c.get_double("mfcc_high_freq_hz", m.high_freq_hz);
  p.cmvn_normalize_variance = c.get_bool("cmvn_normalize_variance", true);

  MeasureConfig &ms = p.measures;
  ms.f0_min_hz = c.get_double("f0_min_hz", ms.f0_min_hz);
  ms.f0_max_hz = c.get_double("f0_max_hz", ms.f0_max_hz);
  ms.hop_ms = c.get_double("f0_hop_ms", ms.hop_ms);
  ms.voicing_threshold = c.get_double("voicing_threshold", ms.voicing_threshold);
  ms.silence_threshold = c.get_double("silence_threshold", ms.silence_threshold);
  ms.octave_cost = c.get_double("octave_cost", ms.octave_cost);
  ms.octave_jump_cost = c.get_double("octave_jump_cost", ms.octave_jump_cost);
  ms.voiced_unvoiced_cost = c.get_double("voiced_unvoiced_cost", ms.voiced_unvoiced_cost);
  ms.max_candidates = positive_int(c, "max_pitch_candidates", ms.max_candidates);
  ms.cpp_frame_ms = c.get_double("cpp_frame_ms", ms.cpp_frame_ms);
  ms.cpp_time_smooth = positive_int(c, "cpp_time_smooth", ms.cpp_time_smooth);
  ms.cpp_quef_smooth = positive_int(c, "cpp_quef_smooth", ms.cpp_quef_smooth);
  ms.lh_cutoff_hz = c.get_double("lh_cutoff_hz", ms.lh_cutoff_hz);
  ms.ps_hop_ms = c.get_double("ps_hop_ms", ms.ps_hop_ms);
  ms.ps_erb_step = c.get_double("ps_erb_step", ms.ps_erb_step);
  ms.ps_candidate_step_oct = c.get_double("ps_candidate_step_oct", ms.ps_candidate_step_oct);
  ms.mfcc = m;
  std::string csid = c.get("csid_coefficients", "");
  if (!csid.empty()) {
    std::filesystem::path cp(csid);
    p.csid_coefficients = cp.is_absolute() ? cp : (base_dir / cp).lexically_normal();
  }

  p.segment.trim_s = c.get_double("trim_s", p.segment.trim_s);
  p.segment.segment_s = c.get_double("segment_s", p.segment.segment_s);
  {
    const long ms = c.get_int("max_segments", p.segment.max_segments);
    if (ms < 0 || ms > 1000000000L) throw UsageError("max_segments must be >= 0");
    p.segment.max_segments = static_cast<int>(ms);
  }
  p.segment.allow_empty = c.get_bool("allow_short_recordings", false);
  p.n_train = positive_int(c, "n_train", p.n_train);
  if (c.has("test_lengths")) {
    p.test_lengths.clear();
    for (const auto &s : c.get_list("test_lengths")) {
      try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size() || v < 1) throw std::invalid_argument(s);
        p.test_lengths.push_back(v);
      } catch (const std::exception &) {
        throw UsageError("test_lengths entries must be positive integers, got '" + s + "'");
      }
    }
  }

  p.seed = static_cast<std::uint64_t>(c.get_int("seed", 0));
  p.ubm.components = positive_int(c, "ubm_components", p.ubm.components);
  p.ubm.em_iters = positive_int(c, "ubm_em_iters", p.ubm.em_iters);
  p.ubm.tol = c.get_double("ubm_tol", p.ubm.tol);
  p.ubm.var_floor_rel = c.get_double("ubm_var_floor", p.ubm.var_floor_rel);
  p.ubm.kmeans_sample = static_cast<std::size_t>(
      positive_int(c, "ubm_kmeans_sample", static_cast<long>(p.ubm.kmeans_sample)));
  p.ubm.seed = derive_seed(p.seed, "ubm");
  long max_frames = c.get_int("ubm_max_frames", 0);
  if (max_frames < 0) throw UsageError("ubm_max_frames must be >= 0");
  p.ubm_max_frames = static_cast<std::size_t>(max_frames);
  p.tv.ivector_dim = positive_int(c, "ivector_dim", p.tv.ivector_dim);
  p.tv.em_iters = positive_int(c, "tv_em_iters", p.tv.em_iters);
  p.tv.init_scale = c.get_double("tv_init_scale", p.tv.init_scale);
  p.tv.seed = derive_seed(p.seed, "tv");
  p.lda_dim = positive_int(c, "lda_dim", p.lda_dim);
  p.plda_em_iters = static_cast<int>(c.get_int("plda_em_iters", p.plda_em_iters));
  std::string scoring = c.get("plda_scoring", "pooled");
  if (scoring == "pooled") p.plda_scoring = PldaScoring::kPooled;
  else if (scoring == "segment-max") p.plda_scoring = PldaScoring::kSegmentMax;
  else throw UsageError("plda_scoring must be pooled or segment-max");
  p.svm.complexity = c.get_double("svm_complexity", p.svm.complexity);
  p.svm.tol = c.get_double("svm_tol", p.svm.tol);
  p.svm.max_iter = positive_int(c, "svm_max_iter", p.svm.max_iter);
  std::string mc = c.get("svm_multiclass", "ovo");
  if (mc == "ovo") p.svm_multiclass = SvmMulticlass::kOneVsOne;
  else if (mc == "ovr") p.svm_multiclass = SvmMulticlass::kOneVsRest;
  else throw UsageError("svm_multiclass must be ovo or ovr");
  std::string cls = c.get("classifier", "both");
  if (cls == "plda") p.classifier = ClassifierChoice::kPlda;
  else if (cls == "svm") p.classifier = ClassifierChoice::kSvm;
  else if (cls == "both") p.classifier = ClassifierChoice::kBoth;
  else throw UsageError("classifier must be plda, svm or both");
  p.run_baseline = c.get_bool("baseline", true);
  p.config_hash = c.hash_hex();
  p.validate();
  return p;
}

void PipelineConfig::validate() const {
  mfcc.validate();
  measures.validate();
  if (!(segment.trim_s >= 0) || !(segment.segment_s > 0))
    throw UsageError("trim_s must be >= 0 and segment_s > 0");
  if (test_lengths.empty()) throw UsageError("test_lengths must not be empty");
  for (int l : test_lengths) {
    if (l > segment.segment_s + 1e-9)
      throw UsageError("test length " + std::to_string(l) + " s exceeds segment_s");
    double ratio = segment.segment_s / l;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
      throw UsageError("test length " + std::to_string(l) + " s does not divide segment_s");
  }
  if (ubm.components < 1 || ubm.em_iters < 1) throw UsageError("UBM settings must be positive");
  if (!(ubm.var_floor_rel > 0)) throw UsageError("ubm_var_floor must be positive");
  if (tv.ivector_dim < 1 || tv.em_iters < 1) throw UsageError("T settings must be positive");
  if (lda_dim > tv.ivector_dim)
    throw UsageError("lda_dim " + std::to_string(lda_dim) + " exceeds ivector_dim " +
                     std::to_string(tv.ivector_dim));
  if (plda_em_iters < 0) throw UsageError("plda_em_iters must be >= 0");
  if (!(svm.complexity > 0) || !(svm.tol > 0)) throw UsageError("SVM settings must be positive");
  if (!csid_coefficients.empty() && !std::filesystem::exists(csid_coefficients))
    throw UsageError("CSID coefficient file not found: " + csid_coefficients.string());
}

std::vector<std::string> PipelineConfig::classifier_names() const {
  switch (classifier) {
    case ClassifierChoice::kPlda: return {"plda"};
    case ClassifierChoice::kSvm: return {"svm"};
    case ClassifierChoice::kBoth: return {"plda", "svm"};
  }
  return {};
}

CsidCoefficients PipelineConfig::csid() const {
  return csid_coefficients.empty() ? CsidCoefficients::placeholder_defaults()
                                   : CsidCoefficients::load(csid_coefficients);
}

RunLog::RunLog(const std::filesystem::path &path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw DataError("cannot open run log " + path.string());
}

void RunLog::line(const std::string &text) {
  std::lock_guard<std::mutex> lock(mu_);
  out_ << text << '\n';
  out_.flush();
}

void RunLog::audit(const std::string &stage, const Segment &seg) {
  line("audit stage=" + stage + " segment=" + seg.id() + " role=" + role_name(seg.role));
}

void RunLog::timing(const std::string &stage, double seconds) {
  line("timing stage=" + stage + " seconds=" + fmt2(seconds));
}

bool AuditSummary::passed(const std::vector<std::string> &required_stages) const {
  if (violations > 0) return false;
  for (const auto &s : required_stages) {
    auto it = per_stage.find(s);
    if (it == per_stage.end() || it->second == 0) return false;
  }
  return true;
}

AuditSummary audit_run_log(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read run log " + path.string());
  AuditSummary s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("audit ", 0) != 0) continue;
    std::map<std::string, std::string> kv;
    std::istringstream ss(line.substr(6));
    std::string tok;
    while (ss >> tok) {
      auto eq = tok.find('=');
      if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    ++s.audit_lines;
    std::string stage = kv["stage"];
    ++s.per_stage[stage.substr(0, stage.find(':'))];
    if (kv["role"] != "train") {
      ++s.violations;
      s.violation_lines.push_back(line);
    }
  }
  return s;
}

std::vector<Segment> build_segments(const RecordingManifest &manifest, const PipelineConfig &cfg) {
  manifest.validate();
  std::vector<Segment> out;
  std::vector<SegmentSet> per_rec(manifest.entries.size());
  parallel_for(manifest.entries.size(), [&](std::size_t i) {
    const Recording &r = manifest.entries[i];
    AudioClip clip = read_wav(r.path);
    per_rec[i] = split_train_test(trim_and_segment(clip, r, cfg.segment), cfg.n_train);
  });
  for (std::size_t i = 0; i < per_rec.size(); ++i) {
    SegmentSet test;
    for (const Segment &s : per_rec[i].segments) {
      out.push_back(s);
      if (s.role == SegmentRole::kTest) test.segments.push_back(s);
    }
    for (int len : cfg.test_lengths) {
      if (std::abs(len - cfg.segment.segment_s) < 1e-9) continue;
      SegmentSet kids = resegment_test(test, len, cfg.segment.segment_s);
      out.insert(out.end(), kids.segments.begin(), kids.segments.end());
    }
  }
  return out;
}

SegmentFeatures extract_segment_features(const std::vector<Segment> &segs,
                                         const PipelineConfig &cfg, bool with_baseline) {
  SegmentFeatures f;
  f.mfcc.resize(segs.size());
  if (with_baseline) f.baseline.resize(segs.size());
  const CsidCoefficients coeffs = cfg.csid();
  std::map<std::filesystem::path, std::vector<std::size_t>> by_rec;
  for (std::size_t i = 0; i < segs.size(); ++i) by_rec[segs[i].recording].push_back(i);
  for (const auto &[path, idx] : by_rec) {
    AudioClip rec = read_wav(path);
    parallel_for(idx.size(), [&](std::size_t j) {
      const std::size_t i = idx[j];
      AudioClip clip = extract_segment(rec, segs[i]);
      f.mfcc[i] = compute_voice_features(clip, cfg.mfcc, cfg.cmvn_normalize_variance);
      if (with_baseline) f.baseline[i] = baseline_feature_vector(clip, cfg.measures, coeffs);
    });
  }
  return f;
}

namespace {

std::vector<std::size_t> training_indices(const std::vector<Segment> &segs, const std::string &stage,
                                          RunLog &log, const std::string &speaker = "") {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].role != SegmentRole::kTrain) continue;
    if (!speaker.empty() && segs[i].speaker != speaker) continue;
    log.audit(stage, segs[i]);
    idx.push_back(i);
  }
  if (idx.empty()) throw DataError("no training segments for stage " + stage);
  return idx;
}

std::vector<std::string> speakers_of(const std::vector<Segment> &segs) {
  std::set<std::string> s;
  for (const auto &seg : segs) s.insert(seg.speaker);
  return {s.begin(), s.end()};
}

Eigen::VectorXd baseline_vec(const BaselineFeatureVector &b) {
  return Eigen::Map<const Eigen::VectorXd>(b.values.data(),
                                           static_cast<Eigen::Index>(b.values.size()));
}

}  // namespace

std::shared_ptr<const DiagonalGmm> train_ubm_stage(const std::vector<Segment> &segs,
                                                   const std::vector<FeatureMatrix> &feats,
                                                   const PipelineConfig &cfg, RunLog &log) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::size_t> idx = training_indices(segs, "ubm", log);
  Eigen::Index rows = 0, cols = feats[idx[0]].cols();
  for (std::size_t i : idx) rows += feats[i].rows();
  Eigen::Index keep = rows;
  if (cfg.ubm_max_frames > 0 && static_cast<Eigen::Index>(cfg.ubm_max_frames) < rows)
    keep = static_cast<Eigen::Index>(cfg.ubm_max_frames);
  Eigen::MatrixXd all(keep, cols);
  // Even stride over the pooled frames when subsampling.
  Eigen::Index at = 0, seen = 0;
  for (std::size_t i : idx) {
    const Eigen::MatrixXd &v = feats[i].values;
    for (Eigen::Index r = 0; r < v.rows(); ++r, ++seen) {
      if ((seen + 1) * keep / rows > seen * keep / rows) all.row(at++) = v.row(r);
    }
  }
  all.conservativeResize(at, cols);
  UbmTrainResult res = train_ubm(all, cfg.ubm);
  for (std::size_t k = 0; k < res.avg_log_likelihood.size(); ++k) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "ubm iter=%zu avg_loglik=%.10g", k, res.avg_log_likelihood[k]);
    log.line(buf);
  }
  log.line("ubm frames=" + std::to_string(all.rows()) + " components=" +
           std::to_string(cfg.ubm.components));
  log.timing("ubm", seconds_since(t0));
  return std::make_shared<const DiagonalGmm>(std::move(res.gmm));
}

std::vector<SufficientStats> stats_stage(const DiagonalGmm &ubm,
                                         const std::vector<FeatureMatrix> &feats) {
  std::vector<SufficientStats> out(feats.size());
  parallel_for(feats.size(), [&](std::size_t i) { out[i] = accumulate_stats(ubm, feats[i]); });
  return out;
}

TotalVariabilityModel train_tv_stage(const std::vector<Segment> &segs,
                                     const std::vector<SufficientStats> &stats,
                                     std::shared_ptr<const DiagonalGmm> ubm,
                                     const PipelineConfig &cfg, RunLog &log) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::size_t> idx = training_indices(segs, "tv", log);
  std::vector<SufficientStats> train;
  train.reserve(idx.size());
  for (std::size_t i : idx) train.push_back(stats[i]);
  TvTrainResult res = train_total_variability(train, std::move(ubm), cfg.tv);
  for (std::size_t k = 0; k < res.objective.size(); ++k) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "tv iter=%zu objective=%.10g recon_error=%.10g", k,
                  res.objective[k], res.reconstruction_error[k]);
    log.line(buf);
  }
  log.timing("tv", seconds_since(t0));
  return std::move(res.model);
}

std::vector<IVector> ivector_stage(const TotalVariabilityModel &tv,
                                   const std::vector<Segment> &segs,
                                   const std::vector<SufficientStats> &stats) {
  std::vector<IVector> out(segs.size());
  parallel_for(segs.size(), [&](std::size_t i) { out[i] = extract_ivector(stats[i], tv, segs[i].id()); });
  return out;
}

LdaTransform fit_postproc_stage(const std::vector<Segment> &segs, const std::vector<IVector> &raw,
                                const PipelineConfig &cfg, RunLog &log) {
  std::vector<std::size_t> idx = training_indices(segs, "lda", log);
  std::vector<Eigen::VectorXd> x;
  std::vector<std::string> labels;
  for (std::size_t i : idx) {
    x.push_back(raw[i].w);
    labels.push_back(segs[i].class_label());
  }
  try {
    LdaTransform lda = fit_lda(x, labels, cfg.lda_dim);
    log.line("lda classes=" + std::to_string(lda.classes()) + " dim=" +
             std::to_string(lda.output_dim()));
    return lda;
  } catch (const DataError &e) {
    std::string msg = std::string("LDA fit failed (") + e.what() + "); using identity projection";
    log.line("warning " + msg);
    log_warning(msg);
    return LdaTransform::identity(x);
  }
}

std::vector<IVector> apply_postproc(const LdaTransform &lda, const std::vector<IVector> &raw) {
  std::vector<IVector> out(raw.size());
  parallel_for(raw.size(), [&](std::size_t i) { out[i] = project_center_lnorm(lda, raw[i]); });
  return out;
}

Standardizer Standardizer::fit(const std::vector<Eigen::VectorXd> &x) {
  if (x.empty()) throw DataError("cannot standardize an empty set");
  const Eigen::Index d = x[0].size();
  Standardizer s;
  s.mean = Eigen::VectorXd::Zero(d);
  for (const auto &v : x) s.mean += v;
  s.mean /= static_cast<double>(x.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto &v : x) var += (v - s.mean).cwiseAbs2();
  var /= static_cast<double>(x.size());
  s.scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) s.scale(j) = var(j) > 1e-24 ? 1.0 / std::sqrt(var(j)) : 1.0;
  return s;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd &x) const {
  if (x.size() != mean.size()) throw UsageError("standardizer dimension mismatch");
  return (x - mean).cwiseProduct(scale);
}

Backends train_backend_stage(const std::vector<Segment> &segs, const std::vector<IVector> &processed,
                             const std::vector<BaselineFeatureVector> &baseline,
                             const PipelineConfig &cfg, RunLog &log) {
  auto t0 = std::chrono::steady_clock::now();
  Backends b;
  const bool use_plda = cfg.classifier != ClassifierChoice::kSvm;
  const bool use_svm = cfg.classifier != ClassifierChoice::kPlda;
  if (use_plda) {
    std::vector<std::size_t> idx = training_indices(segs, "plda", log);
    std::vector<Eigen::VectorXd> x;
    std::vector<std::string> labels;
    for (std::size_t i : idx) {
      x.push_back(processed[i].w);
      labels.push_back(segs[i].class_label());
    }
    PldaTrainResult res = train_plda(x, labels, cfg.plda_em_iters);
    for (std::size_t k = 0; k < res.log_likelihood.size(); ++k) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "plda iter=%zu loglik=%.10g", k, res.log_likelihood[k]);
      log.line(buf);
    }
    b.plda = std::move(res.model);
  }
  const std::vector<std::string> speakers = speakers_of(segs);
  if (use_svm) {
    std::vector<std::size_t> idx = training_indices(segs, "svm-inter", log);
    std::vector<Eigen::VectorXd> x;
    std::vector<std::string> labels;
    for (std::size_t i : idx) {
      x.push_back(processed[i].w);
      labels.push_back(segs[i].class_label());
    }
    b.svm_inter = train_linear_svm(x, labels, cfg.svm, cfg.svm_multiclass);
    for (const auto &spk : speakers) {
      std::vector<std::size_t> sidx = training_indices(segs, "svm-intra:" + spk, log, spk);
      std::vector<Eigen::VectorXd> sx;
      std::vector<std::string> sl;
      for (std::size_t i : sidx) {
        sx.push_back(processed[i].w);
        sl.push_back(segs[i].class_label());
      }
      b.svm_intra.emplace(spk, train_linear_svm(sx, sl, cfg.svm, cfg.svm_multiclass));
    }
  }
  if (cfg.run_baseline && !baseline.empty()) {
    for (const auto &spk : speakers) {
      std::vector<std::size_t> sidx = training_indices(segs, "baseline-svm:" + spk, log, spk);
      std::vector<Eigen::VectorXd> sx;
      std::vector<std::string> sl;
      for (std::size_t i : sidx) {
        sx.push_back(baseline_vec(baseline[i]));
        sl.push_back(segs[i].class_label());
      }
      Standardizer st = Standardizer::fit(sx);
      for (auto &v : sx) v = st.apply(v);
      b.baseline_svm.emplace(spk, train_linear_svm(sx, sl, cfg.svm, cfg.svm_multiclass));
      b.baseline_scale.emplace(spk, std::move(st));
    }
  }
  log.timing("backend", seconds_since(t0));
  return b;
}

void Backends::save(const std::filesystem::path &dir) const {
  std::filesystem::create_directories(dir);
  if (plda) plda->save(dir / "plda.vqpl");
  if (svm_inter) svm_inter->save(dir / "svm_inter.vqsv");
  for (const auto &[spk, m] : svm_intra) m.save(dir / ("svm_intra_" + spk + ".vqsv"));
  for (const auto &[spk, m] : baseline_svm) m.save(dir / ("baseline_svm_" + spk + ".vqsv"));
  for (const auto &[spk, st] : baseline_scale) {
    BinaryWriter w(dir / ("baseline_scale_" + spk + ".vqsc"), "VQSC", 1);
    w.u64(static_cast<std::uint64_t>(st.mean.size()));
    w.vec(st.mean);
    w.vec(st.scale);
    w.close();
  }
}

Backends Backends::load(const std::filesystem::path &dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("backend directory not found: " + dir.string());
  Backends b;
  std::vector<std::filesystem::path> files;
  for (const auto &e : std::filesystem::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  auto strip = [](const std::string &name, const std::string &prefix, const std::string &ext) {
    return name.substr(prefix.size(), name.size() - prefix.size() - ext.size());
  };
  auto starts = [](const std::string &s, const std::string &p) { return s.rfind(p, 0) == 0; };
  for (const auto &f : files) {
    const std::string name = f.filename().string();
    if (name == "plda.vqpl") {
      b.plda = PldaModel::load(f);
    } else if (name == "svm_inter.vqsv") {
      b.svm_inter = LinearSvmModel::load(f);
    } else if (starts(name, "svm_intra_") && f.extension() == ".vqsv") {
      b.svm_intra.emplace(strip(name, "svm_intra_", ".vqsv"), LinearSvmModel::load(f));
    } else if (starts(name, "baseline_svm_") && f.extension() == ".vqsv") {
      b.baseline_svm.emplace(strip(name, "baseline_svm_", ".vqsv"), LinearSvmModel::load(f));
    } else if (starts(name, "baseline_scale_") && f.extension() == ".vqsc") {
      BinaryReader r(f, "VQSC");
      std::uint64_t d = r.u64();
      if (d == 0 || d > 100000) throw DataError("implausible standardizer size in " + f.string());
      Standardizer st;
      st.mean = r.vec(static_cast<Eigen::Index>(d));
      st.scale = r.vec(static_cast<Eigen::Index>(d));
      r.expect_end();
      b.baseline_scale.emplace(strip(name, "baseline_scale_", ".vqsc"), std::move(st));
    }
  }
  if (!b.plda && !b.svm_inter && b.baseline_svm.empty())
    throw DataError("no trained back-end models in " + dir.string());
  return b;
}

namespace {

std::string quality_of(const std::string &class_label) {
  const auto slash = class_label.find('/');
  return slash == std::string::npos ? class_label : class_label.substr(slash + 1);
}

std::vector<ClassEnrollment> enrollments_for(const std::vector<Segment> &segs,
                                             const std::vector<IVector> &processed,
                                             const std::string &speaker) {
  std::map<std::string, std::vector<Eigen::VectorXd>> by_class;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].role != SegmentRole::kTrain) continue;
    if (!speaker.empty() && segs[i].speaker != speaker) continue;
    by_class[segs[i].class_label()].push_back(processed[i].w);
  }
  std::vector<ClassEnrollment> out;
  for (auto &[label, v] : by_class) out.push_back({label, std::move(v)});
  return out;
}

EvaluationReport empty_report(const std::string &system, const std::string &task,
                              const std::vector<std::string> &actors,
                              const std::vector<std::string> &classifiers,
                              std::vector<std::string> class_labels, const PipelineConfig &cfg) {
  EvaluationReport r;
  r.system = system;
  r.task = task;
  r.actors = actors;
  r.lengths = cfg.test_lengths;
  r.classifiers = classifiers;
  r.class_labels = std::move(class_labels);
  r.config_hash = cfg.config_hash;
  r.seed = cfg.seed;
  const std::size_t k = r.class_labels.size();
  for (const auto &a : actors)
    for (int len : r.lengths)
      for (const auto &c : classifiers)
        r.cells[{a, len, c}].confusion.assign(k, std::vector<int>(k, 0));
  return r;
}

void record(EvaluationReport &r, const std::string &actor, int len, const std::string &cls,
            const std::string &truth, const std::string &predicted) {
  auto it = r.cells.find({actor, len, cls});
  if (it == r.cells.end()) return;
  ReportCell &c = it->second;
  auto pos = [&](const std::string &l) {
    auto p = std::find(r.class_labels.begin(), r.class_labels.end(), l);
    if (p == r.class_labels.end()) throw DataError("label outside the report axes: " + l);
    return static_cast<std::size_t>(p - r.class_labels.begin());
  };
  ++c.total;
  if (truth == predicted) ++c.correct;
  ++c.confusion[pos(truth)][pos(predicted)];
}

}  // namespace

const ReportCell &EvaluationReport::cell(const std::string &actor, int length,
                                         const std::string &cls) const {
  auto it = cells.find({actor, length, cls});
  if (it == cells.end())
    throw UsageError("no report cell for " + actor + " " + std::to_string(length) + "s " + cls);
  return it->second;
}

double EvaluationReport::average(int length, const std::string &cls) const {
  if (actors.empty()) return 0.0;
  double sum = 0.0;
  for (const auto &a : actors) sum += cell(a, length, cls).accuracy();
  return sum / static_cast<double>(actors.size());
}

std::string EvaluationReport::to_text() const {
  std::ostringstream os;
  os << "# system=" << system << " task=" << task << " config_hash=" << config_hash
     << " seed=" << seed << "\n";
  os << "# accuracy in percent of test segments\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-8s %-6s", "length", "clf");
  os << buf;
  for (const auto &a : actors) {
    std::snprintf(buf, sizeof buf, " %9s", a.c_str());
    os << buf;
  }
  os << "   average\n";
  for (int len : lengths) {
    for (const auto &c : classifiers) {
      std::snprintf(buf, sizeof buf, "%-8s %-6s", (std::to_string(len) + "s").c_str(), c.c_str());
      os << buf;
      for (const auto &a : actors) {
        std::snprintf(buf, sizeof buf, " %9.2f", cell(a, len, c).accuracy());
        os << buf;
      }
      std::snprintf(buf, sizeof buf, " %9.2f\n", average(len, c));
      os << buf;
    }
  }
  return os.str();
}

std::string EvaluationReport::to_tsv() const {
  std::ostringstream os;
  os << "# system=" << system << " task=" << task << " config_hash=" << config_hash
     << " seed=" << seed << "\n";
  os << "actor\tlength_s\tclassifier\tcorrect\ttotal\taccuracy\n";
  char buf[32];
  for (int len : lengths) {
    for (const auto &c : classifiers) {
      for (const auto &a : actors) {
        const ReportCell &rc = cell(a, len, c);
        std::snprintf(buf, sizeof buf, "%.2f", rc.accuracy());
        os << a << '\t' << len << '\t' << c << '\t' << rc.correct << '\t' << rc.total << '\t'
           << buf << '\n';
      }
      std::snprintf(buf, sizeof buf, "%.2f", average(len, c));
      os << "average\t" << len << '\t' << c << "\t\t\t" << buf << '\n';
    }
  }
  return os.str();
}

std::string EvaluationReport::confusion_tsv() const {
  std::ostringstream os;
  os << "# system=" << system << " task=" << task << " config_hash=" << config_hash
     << " seed=" << seed << "\n";
  os << "# rows: true label, columns: predicted label, summed over actors\n";
  const std::size_t k = class_labels.size();
  for (int len : lengths) {
    for (const auto &c : classifiers) {
      std::vector<std::vector<int>> sum(k, std::vector<int>(k, 0));
      for (const auto &a : actors) {
        const auto &m = cell(a, len, c).confusion;
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) sum[i][j] += m[i][j];
      }
      os << "length=" << len << "s classifier=" << c << '\n' << "true\\pred";
      for (const auto &l : class_labels) os << '\t' << l;
      os << '\n';
      for (std::size_t i = 0; i < k; ++i) {
        os << class_labels[i];
        for (std::size_t j = 0; j < k; ++j) os << '\t' << sum[i][j];
        os << '\n';
      }
    }
  }
  return os.str();
}

EvaluationResults evaluate_stage(const std::vector<Segment> &segs,
                                 const std::vector<IVector> &processed,
                                 const std::vector<BaselineFeatureVector> &baseline,
                                 const Backends &backends, const PipelineConfig &cfg) {
  if (processed.size() != segs.size()) throw UsageError("i-vectors do not match segments");
  const std::vector<std::string> speakers = speakers_of(segs);
  std::vector<std::string> qualities(kQualities.begin(), kQualities.end());
  std::vector<std::string> classes;
  {
    std::set<std::string> s;
    for (const auto &seg : segs) s.insert(seg.class_label());
    classes.assign(s.begin(), s.end());
  }
  std::vector<std::string> clf;
  if (backends.plda) clf.push_back("plda");
  if (backends.svm_inter || !backends.svm_intra.empty()) clf.push_back("svm");

  EvaluationResults res;
  res.ivector_intra = empty_report("ivector", "intra", speakers, clf, qualities, cfg);
  res.ivector_inter = empty_report("ivector", "inter", speakers, clf, classes, cfg);
  res.has_baseline = !backends.baseline_svm.empty() && !baseline.empty();
  if (res.has_baseline)
    res.baseline_intra = empty_report("baseline", "intra", speakers, {"svm"}, qualities, cfg);

  std::map<std::string, PldaScorer> intra_scorers;
  std::optional<PldaScorer> inter_scorer;
  if (backends.plda) {
    for (const auto &spk : speakers)
      intra_scorers.emplace(spk, PldaScorer(*backends.plda, enrollments_for(segs, processed, spk),
                                            cfg.plda_scoring));
    inter_scorer.emplace(*backends.plda, enrollments_for(segs, processed, ""), cfg.plda_scoring);
  }

  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Segment &s = segs[i];
    if (s.role != SegmentRole::kTest) continue;
    const int len = s.length_label();
    if (std::find(cfg.test_lengths.begin(), cfg.test_lengths.end(), len) == cfg.test_lengths.end())
      continue;
    const Eigen::VectorXd &w = processed[i].w;
    const std::string truth = s.class_label();
    if (backends.plda) {
      record(res.ivector_intra, s.speaker, len, "plda", s.quality,
             quality_of(intra_scorers.at(s.speaker).classify(w).label));
      record(res.ivector_inter, s.speaker, len, "plda", truth, inter_scorer->classify(w).label);
    }
    if (auto it = backends.svm_intra.find(s.speaker); it != backends.svm_intra.end())
      record(res.ivector_intra, s.speaker, len, "svm", s.quality,
             quality_of(svm_predict(it->second, w)));
    if (backends.svm_inter)
      record(res.ivector_inter, s.speaker, len, "svm", truth, svm_predict(*backends.svm_inter, w));
    if (res.has_baseline) {
      auto st = backends.baseline_scale.find(s.speaker);
      auto m = backends.baseline_svm.find(s.speaker);
      if (st != backends.baseline_scale.end() && m != backends.baseline_svm.end())
        record(res.baseline_intra, s.speaker, len, "svm", s.quality,
               quality_of(svm_predict(m->second, st->second.apply(baseline_vec(baseline[i])))));
    }
  }
  return res;
}

void write_reports(const EvaluationResults &results, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  auto one = [&](const EvaluationReport &r) {
    const std::string stem = "report_" + r.system + "_" + r.task;
    write_text_file(dir / (stem + ".txt"), r.to_text());
    write_text_file(dir / (stem + ".tsv"), r.to_tsv());
    write_text_file(dir / (stem + "_confusion.tsv"), r.confusion_tsv());
  };
  one(results.ivector_intra);
  one(results.ivector_inter);
  if (results.has_baseline) one(results.baseline_intra);
}

double silhouette_score(const std::vector<Eigen::VectorXd> &points,
                        const std::vector<std::string> &labels) {
  if (points.size() != labels.size()) throw UsageError("silhouette: size mismatch");
  const std::size_t n = points.size();
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[labels[i]].push_back(i);
  if (groups.size() < 2) throw DataError("silhouette needs at least two labels");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = 0.0, b = std::numeric_limits<double>::infinity();
    bool singleton = false;
    for (const auto &[label, idx] : groups) {
      double sum = 0.0;
      for (std::size_t j : idx) sum += (points[i] - points[j]).norm();
      if (label == labels[i]) {
        if (idx.size() < 2) singleton = true;
        else a = sum / static_cast<double>(idx.size() - 1);
      } else {
        b = std::min(b, sum / static_cast<double>(idx.size()));
      }
    }
    const double denom = std::max(a, b);
    if (!singleton && denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

std::vector<ScatterRow> export_lda_scatter(const std::vector<IVector> &processed,
                                           const std::vector<std::string> &labels,
                                           const std::filesystem::path &tsv_path,
                                           const std::filesystem::path &svg_path) {
  if (processed.size() != labels.size()) throw UsageError("scatter: size mismatch");
  std::vector<ScatterRow> rows;
  std::vector<ScatterPoint> pts;
  std::ostringstream os;
  os << "id\tlabel\tdim1\tdim2\n";
  char buf[64];
  for (std::size_t i = 0; i < processed.size(); ++i) {
    if (processed[i].w.size() < 2) throw UsageError("scatter needs at least two dimensions");
    ScatterRow r{processed[i].w(0), processed[i].w(1), labels[i]};
    std::snprintf(buf, sizeof buf, "%.9g\t%.9g", r.dim1, r.dim2);
    os << processed[i].id << '\t' << r.label << '\t' << buf << '\n';
    pts.push_back({r.dim1, r.dim2, r.label});
    rows.push_back(std::move(r));
  }
  write_text_file(tsv_path, os.str());
  write_text_file(svg_path, render_scatter_svg(pts, "LDA projection", "dimension 1", "dimension 2"));
  return rows;
}

std::vector<std::filesystem::path> export_spectrograms(const RecordingManifest &manifest,
                                                       const std::string &speaker,
                                                       const PipelineConfig &cfg,
                                                       const std::filesystem::path &out_dir,
                                                       double excerpt_s) {
  if (!(excerpt_s > 0.0)) throw UsageError("excerpt length must be positive");
  std::vector<std::pair<std::string, Eigen::MatrixXd>> images;
  double hi = -std::numeric_limits<double>::infinity();
  for (std::string_view q : kQualities) {
    auto it = std::find_if(manifest.entries.begin(), manifest.entries.end(), [&](const Recording &r) {
      return r.speaker == speaker && r.quality == q;
    });
    if (it == manifest.entries.end())
      throw DataError("no " + std::string(q) + " recording for speaker " + speaker);
    AudioClip clip = read_wav(it->path);
    const auto fs = static_cast<double>(clip.sample_rate_hz);
    const auto begin = static_cast<std::size_t>(std::floor(cfg.segment.trim_s * fs + 0.5));
    const auto count = static_cast<std::size_t>(std::floor(excerpt_s * fs + 0.5));
    if (begin + count > clip.samples.size())
      throw DataError("recording too short for a spectrogram excerpt: " + it->path.string());
    AudioClip ex = slice(clip, begin, count, speaker + "/" + std::string(q));
    Spectrogram s = spectrogram(ex, SpectrogramConfig{});
    // Rows are frequency bins with the highest at the top.
    Eigen::MatrixXd db = (20.0 * s.magnitude.array().log10()).matrix().transpose().colwise().reverse();
    hi = std::max(hi, db.maxCoeff());
    images.emplace_back(std::string(q), std::move(db));
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> out;
  for (const auto &[q, img] : images) {
    auto path = out_dir / ("spectrogram_" + speaker + "_" + q + ".pgm");
    write_pgm(path, img, hi - 80.0, hi);
    out.push_back(path);
  }
  return out;
}

double high_band_flatness(const Spectrogram &s, double min_hz, double band_hz) {
  if (s.bin_hz <= 0.0 || s.magnitude.rows() == 0) throw UsageError("empty spectrogram");
  if (!(band_hz > 0.0)) throw UsageError("sub-band width must be positive");
  const auto first = static_cast<Eigen::Index>(std::ceil(min_hz / s.bin_hz));
  const auto width = std::max<Eigen::Index>(2, std::lround(band_hz / s.bin_hz));
  const Eigen::Index bands = first < 0 ? 0 : (s.magnitude.cols() - first) / width;
  if (bands < 1) throw UsageError("no sub-band above " + std::to_string(min_hz) + " Hz");
  double total = 0.0;
  for (Eigen::Index t = 0; t < s.magnitude.rows(); ++t) {
    for (Eigen::Index b = 0; b < bands; ++b) {
      Eigen::ArrayXd p = s.magnitude.row(t).segment(first + b * width, width).array().square().transpose();
      const double arith = p.mean();
      const double geo = std::exp(p.log().mean());
      total += arith > 0.0 ? geo / arith : 0.0;
    }
  }
  return total / static_cast<double>(s.magnitude.rows() * bands);
}

PipelineOutputs run_pipeline(const RecordingManifest &manifest, const PipelineConfig &cfg,
                             const std::filesystem::path &work_dir) {
  cfg.validate();
  manifest.validate();
  const std::size_t classes = manifest.entries.size();
  if (cfg.lda_dim >= static_cast<int>(classes))
    throw UsageError("lda_dim " + std::to_string(cfg.lda_dim) + " must be below the " +
                     std::to_string(classes) + " classes");
  std::filesystem::create_directories(work_dir);
  const auto total0 = std::chrono::steady_clock::now();
  RunLog log(work_dir / "run.log");
  log.line("pipeline config_hash=" + cfg.config_hash + " seed=" + std::to_string(cfg.seed));

  auto t0 = std::chrono::steady_clock::now();
  std::vector<Segment> segs = build_segments(manifest, cfg);
  SegmentSet{segs}.save(work_dir / "segments.tsv");
  log.line("segments total=" + std::to_string(segs.size()));
  log.timing("segment", seconds_since(t0));

  t0 = std::chrono::steady_clock::now();
  SegmentFeatures feats = extract_segment_features(segs, cfg, cfg.run_baseline);
  log.timing("features", seconds_since(t0));

  auto ubm = train_ubm_stage(segs, feats.mfcc, cfg, log);
  ubm->save(work_dir / "ubm.vqgm");
  t0 = std::chrono::steady_clock::now();
  std::vector<SufficientStats> stats = stats_stage(*ubm, feats.mfcc);
  feats.mfcc.clear();
  feats.mfcc.shrink_to_fit();
  log.timing("stats", seconds_since(t0));

  TotalVariabilityModel tv = train_tv_stage(segs, stats, ubm, cfg, log);
  tv.save(work_dir / "tv.vqtv");
  t0 = std::chrono::steady_clock::now();
  std::vector<IVector> raw = ivector_stage(tv, segs, stats);
  write_ivectors_csv(work_dir / "ivectors_raw.csv", raw);
  log.timing("ivectors", seconds_since(t0));

  LdaTransform lda = fit_postproc_stage(segs, raw, cfg, log);
  lda.save(work_dir / "lda.vqld");
  std::vector<IVector> processed = apply_postproc(lda, raw);
  write_ivectors_csv(work_dir / "ivectors.csv", processed);

  Backends backends = train_backend_stage(segs, processed, feats.baseline, cfg, log);
  backends.save(work_dir / "backends");

  t0 = std::chrono::steady_clock::now();
  PipelineOutputs out;
  out.work_dir = work_dir;
  out.results = evaluate_stage(segs, processed, feats.baseline, backends, cfg);
  write_reports(out.results, work_dir / "reports");
  log.timing("evaluate", seconds_since(t0));

  if (lda.output_dim() >= 2) {
    for (const auto &spk : manifest.speakers()) {
      std::vector<IVector> pts;
      std::vector<std::string> labels;
      for (std::size_t i = 0; i < segs.size(); ++i) {
        if (segs[i].speaker != spk || segs[i].length_label() != static_cast<int>(std::lround(cfg.segment.segment_s))) continue;
        pts.push_back(processed[i]);
        labels.push_back(segs[i].quality);
      }
      export_lda_scatter(pts, labels, work_dir / "plots" / ("lda_" + spk + ".tsv"),
                         work_dir / "plots" / ("lda_" + spk + ".svg"));
    }
  }
  log.timing("total", seconds_since(total0));
  AuditSummary audit = audit_run_log(log.path());
  log.line("audit-summary lines=" + std::to_string(audit.audit_lines) +
           " violations=" + std::to_string(audit.violations));
  return out;
}

}  // namespace vqid
