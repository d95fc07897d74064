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

#ifndef VQID_WORKSPACE_H_
#define VQID_WORKSPACE_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vqid/experiment.h"

namespace vqid {

// Sidecar written next to every artifact as <artifact>.meta.
struct ArtifactMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string stage;
};
void write_meta(const std::filesystem::path &artifact, const ArtifactMeta &meta);
// Throws DataError when the sidecar is missing or malformed.
ArtifactMeta read_meta(const std::filesystem::path &artifact);

// Work directory shared by the staged CLI commands. Artifact names are
// relative to the directory.
class Workspace {
 public:
  Workspace(std::filesystem::path dir, PipelineConfig cfg, bool force);

  const std::filesystem::path &dir() const { return dir_; }
  const PipelineConfig &config() const { return cfg_; }
  std::filesystem::path path(const std::string &artifact) const { return dir_ / artifact; }

  // DataError naming the artifact and the command producing it when absent;
  // UsageError when its config hash differs from the current one.
  void require(const std::string &artifact) const;
  // UsageError when the artifact exists and force is off.
  void prepare_output(const std::string &artifact) const;
  void mark(const std::string &artifact, const std::string &stage) const;
  // UsageError unless every artifact sidecar in the directory tree carries
  // the same config hash.
  void check_uniform_hash() const;
  RunLog &log();

  std::vector<Segment> load_segments() const;
  std::vector<FeatureMatrix> load_features(const std::vector<Segment> &segs) const;
  std::vector<BaselineFeatureVector> load_baseline(const std::vector<Segment> &segs) const;
  std::shared_ptr<const DiagonalGmm> load_ubm() const;

 private:
  std::filesystem::path dir_;
  PipelineConfig cfg_;
  bool force_;
  std::unique_ptr<RunLog> log_;
};

// Artifact names.
inline constexpr const char *kSegmentsFile = "segments.tsv";
inline constexpr const char *kFeatureDir = "features";
inline constexpr const char *kBaselineFile = "baseline.tsv";
inline constexpr const char *kUbmFile = "ubm.vqgm";
inline constexpr const char *kTvFile = "tv.vqtv";
inline constexpr const char *kRawIvectorFile = "ivectors_raw.csv";
inline constexpr const char *kLdaFile = "lda.vqld";
inline constexpr const char *kIvectorFile = "ivectors.csv";
inline constexpr const char *kBackendDir = "backends";
inline constexpr const char *kReportDir = "reports";

std::string feature_file_name(std::size_t segment_index);
void write_baseline_tsv(const std::filesystem::path &path, const std::vector<Segment> &segs,
                        const std::vector<BaselineFeatureVector> &v);
std::vector<BaselineFeatureVector> read_baseline_tsv(const std::filesystem::path &path,
                                                     const std::vector<Segment> &segs);

}  // namespace vqid

#endif  // VQID_WORKSPACE_H_
