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

#ifndef VQID_EXPERIMENT_H_
#define VQID_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "vqid/config.h"
#include "vqid/corpus.h"
#include "vqid/features.h"
#include "vqid/gmm.h"
#include "vqid/ivector.h"
#include "vqid/lda.h"
#include "vqid/measures.h"
#include "vqid/plda.h"
#include "vqid/svm.h"

namespace vqid {

enum class ClassifierChoice { kPlda, kSvm, kBoth };

struct PipelineConfig {
  MfccConfig mfcc;
  bool cmvn_normalize_variance = true;
  MeasureConfig measures;
  std::filesystem::path csid_coefficients;  // empty: placeholder weights
  SegmentConfig segment;
  int n_train = 20;
  std::vector<int> test_lengths = {8, 4, 2};
  UbmTrainConfig ubm;
  // Training frames for the UBM, taken at an even stride; 0 uses all.
  std::size_t ubm_max_frames = 0;
  TvTrainConfig tv;
  int lda_dim = 64;
  int plda_em_iters = 10;
  PldaScoring plda_scoring = PldaScoring::kPooled;
  SvmTrainConfig svm;
  SvmMulticlass svm_multiclass = SvmMulticlass::kOneVsOne;
  ClassifierChoice classifier = ClassifierChoice::kBoth;
  bool run_baseline = true;
  std::uint64_t seed = 0;
  std::string config_hash;

  // Reads every key; relative paths resolve against base_dir. Throws
  // UsageError on malformed or out-of-range values.
  static PipelineConfig from_config(const Config &cfg,
                                    const std::filesystem::path &base_dir = ".");
  void validate() const;
  std::vector<std::string> classifier_names() const;
  CsidCoefficients csid() const;
};

// Append-only run log. Audit lines record every segment fed to a training
// stage together with its role tag.
class RunLog {
 public:
  explicit RunLog(const std::filesystem::path &path);
  void line(const std::string &text);
  void audit(const std::string &stage, const Segment &seg);
  void timing(const std::string &stage, double seconds);
  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
};

struct AuditSummary {
  std::size_t audit_lines = 0;
  std::size_t violations = 0;  // audit lines whose role is not train
  std::map<std::string, std::size_t> per_stage;
  std::vector<std::string> violation_lines;
  bool passed(const std::vector<std::string> &required_stages) const;
};
AuditSummary audit_run_log(const std::filesystem::path &path);

// All segments of the protocol: 8 s train and test segments plus shorter
// test clips cut from the test segments, in manifest order.
std::vector<Segment> build_segments(const RecordingManifest &manifest, const PipelineConfig &cfg);

struct SegmentFeatures {
  std::vector<FeatureMatrix> mfcc;              // aligned with segments
  std::vector<BaselineFeatureVector> baseline;  // empty without baseline
};

// Loads one recording at a time and computes features for its segments.
SegmentFeatures extract_segment_features(const std::vector<Segment> &segs,
                                         const PipelineConfig &cfg, bool with_baseline);

// Training stages. Each uses only train-role segments and writes one audit
// line per input segment.
std::shared_ptr<const DiagonalGmm> train_ubm_stage(const std::vector<Segment> &segs,
                                                   const std::vector<FeatureMatrix> &feats,
                                                   const PipelineConfig &cfg, RunLog &log);
std::vector<SufficientStats> stats_stage(const DiagonalGmm &ubm,
                                         const std::vector<FeatureMatrix> &feats);
TotalVariabilityModel train_tv_stage(const std::vector<Segment> &segs,
                                     const std::vector<SufficientStats> &stats,
                                     std::shared_ptr<const DiagonalGmm> ubm,
                                     const PipelineConfig &cfg, RunLog &log);
std::vector<IVector> ivector_stage(const TotalVariabilityModel &tv,
                                   const std::vector<Segment> &segs,
                                   const std::vector<SufficientStats> &stats);
// Falls back to an identity projection, with a logged warning, when the
// training classes have no between-class scatter.
LdaTransform fit_postproc_stage(const std::vector<Segment> &segs,
                                const std::vector<IVector> &raw, const PipelineConfig &cfg,
                                RunLog &log);
std::vector<IVector> apply_postproc(const LdaTransform &lda, const std::vector<IVector> &raw);

// z-scoring with training statistics; zero-variance dimensions pass through
// centred.
struct Standardizer {
  Eigen::VectorXd mean, scale;
  static Standardizer fit(const std::vector<Eigen::VectorXd> &x);
  Eigen::VectorXd apply(const Eigen::VectorXd &x) const;
};

struct Backends {
  std::optional<PldaModel> plda;
  std::map<std::string, LinearSvmModel> svm_intra;  // per speaker
  std::optional<LinearSvmModel> svm_inter;
  std::map<std::string, Standardizer> baseline_scale;  // per speaker
  std::map<std::string, LinearSvmModel> baseline_svm;  // per speaker

  void save(const std::filesystem::path &dir) const;
  static Backends load(const std::filesystem::path &dir);
};

Backends train_backend_stage(const std::vector<Segment> &segs,
                             const std::vector<IVector> &processed,
                             const std::vector<BaselineFeatureVector> &baseline,
                             const PipelineConfig &cfg, RunLog &log);

struct ReportCell {
  int correct = 0;
  int total = 0;
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  double accuracy() const { return total > 0 ? 100.0 * correct / total : 0.0; }
};

struct EvaluationReport {
  std::string system;  // ivector or baseline
  std::string task;    // intra or inter
  std::vector<std::string> actors;
  std::vector<int> lengths;
  std::vector<std::string> classifiers;
  std::vector<std::string> class_labels;  // confusion axes
  std::map<std::tuple<std::string, int, std::string>, ReportCell> cells;
  std::string config_hash;
  std::uint64_t seed = 0;

  const ReportCell &cell(const std::string &actor, int length, const std::string &cls) const;
  // Unweighted mean over actors.
  double average(int length, const std::string &cls) const;
  std::string to_text() const;
  std::string to_tsv() const;
  std::string confusion_tsv() const;
};

struct EvaluationResults {
  EvaluationReport ivector_intra, ivector_inter, baseline_intra;
  bool has_baseline = false;
};

EvaluationResults evaluate_stage(const std::vector<Segment> &segs,
                                 const std::vector<IVector> &processed,
                                 const std::vector<BaselineFeatureVector> &baseline,
                                 const Backends &backends, const PipelineConfig &cfg);

// Writes report_<system>_<task>.txt, .tsv and _confusion.tsv files.
void write_reports(const EvaluationResults &results, const std::filesystem::path &dir);

// Mean silhouette coefficient with Euclidean distance.
double silhouette_score(const std::vector<Eigen::VectorXd> &points,
                        const std::vector<std::string> &labels);

struct ScatterRow {
  double dim1 = 0.0, dim2 = 0.0;
  std::string label;
};
// First two LDA dimensions of each vector. Throws UsageError when d < 2.
std::vector<ScatterRow> export_lda_scatter(const std::vector<IVector> &processed,
                                           const std::vector<std::string> &labels,
                                           const std::filesystem::path &tsv_path,
                                           const std::filesystem::path &svg_path);

// One PGM image per quality from the first excerpt_s seconds after the
// trim, on a shared dB scale. Throws DataError if a quality is missing.
std::vector<std::filesystem::path> export_spectrograms(const RecordingManifest &manifest,
                                                       const std::string &speaker,
                                                       const PipelineConfig &cfg,
                                                       const std::filesystem::path &out_dir,
                                                       double excerpt_s = 3.0);

// Spectral flatness (geometric over arithmetic mean of power) of consecutive
// sub-bands of width band_hz from min_hz up to Nyquist, averaged over
// sub-bands and frames. Narrow sub-bands measure harmonic striation rather
// than overall spectral tilt.
double high_band_flatness(const Spectrogram &s, double min_hz, double band_hz = 500.0);

struct PipelineOutputs {
  EvaluationResults results;
  std::filesystem::path work_dir;
};

// Full run in memory: segments, features, UBM, T, i-vectors, LDA, back-ends,
// evaluation, reports, LDA scatter plots and the run log under work_dir.
PipelineOutputs run_pipeline(const RecordingManifest &manifest, const PipelineConfig &cfg,
                             const std::filesystem::path &work_dir);

}  // namespace vqid

#endif  // VQID_EXPERIMENT_H_
