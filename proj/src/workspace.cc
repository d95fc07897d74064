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

#include "vqid/workspace.h"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "vqid/error.h"
#include "vqid/plot.h"

namespace vqid {

namespace {

const std::map<std::string, std::string> &producers() {
  static const std::map<std::string, std::string> m = {
      {kSegmentsFile, "ingest"},          {kFeatureDir, "extract-features"},
      {kBaselineFile, "extract-features"}, {kUbmFile, "train-ubm"},
      {kTvFile, "train-tv"},              {kRawIvectorFile, "extract-ivectors"},
      {kLdaFile, "fit-postproc"},         {kIvectorFile, "fit-postproc"},
      {kBackendDir, "train-backend"},     {kReportDir, "evaluate"},
  };
  return m;
}

std::filesystem::path meta_path(const std::filesystem::path &artifact) {
  auto p = artifact;
  p += ".meta";
  return p;
}

}  // namespace

void write_meta(const std::filesystem::path &artifact, const ArtifactMeta &meta) {
  std::ostringstream os;
  os << "config_hash=" << meta.config_hash << "\nseed=" << meta.seed << "\nstage=" << meta.stage
     << "\n";
  write_text_file(meta_path(artifact), os.str());
}

ArtifactMeta read_meta(const std::filesystem::path &artifact) {
  std::ifstream in(meta_path(artifact));
  if (!in) throw DataError("missing metadata for artifact " + artifact.string());
  ArtifactMeta m;
  bool has_hash = false;
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "config_hash") {
      m.config_hash = v;
      has_hash = true;
    } else if (k == "seed") {
      try {
        m.seed = std::stoull(v);
      } catch (const std::exception &) {
        throw DataError("bad seed in metadata for " + artifact.string());
      }
    } else if (k == "stage") {
      m.stage = v;
    }
  }
  if (!has_hash) throw DataError("metadata without config hash for " + artifact.string());
  return m;
}

Workspace::Workspace(std::filesystem::path dir, PipelineConfig cfg, bool force)
    : dir_(std::move(dir)), cfg_(std::move(cfg)), force_(force) {
  std::filesystem::create_directories(dir_);
}

void Workspace::require(const std::string &artifact) const {
  const auto p = path(artifact);
  if (!std::filesystem::exists(p) || !std::filesystem::exists(meta_path(p))) {
    auto it = producers().find(artifact);
    throw DataError("missing artifact " + p.string() +
                    (it != producers().end() ? "; run " + it->second + " first" : ""));
  }
  const ArtifactMeta m = read_meta(p);
  if (m.config_hash != cfg_.config_hash)
    throw UsageError("artifact " + p.string() + " was produced with config hash " +
                     m.config_hash + ", current config hash is " + cfg_.config_hash);
}

void Workspace::prepare_output(const std::string &artifact) const {
  const auto p = path(artifact);
  if (std::filesystem::exists(p)) {
    if (!force_) throw UsageError("artifact " + p.string() + " exists; pass --force to overwrite");
    std::filesystem::remove_all(p);
    std::filesystem::remove(meta_path(p));
  }
}

void Workspace::mark(const std::string &artifact, const std::string &stage) const {
  write_meta(path(artifact), {cfg_.config_hash, cfg_.seed, stage});
}

void Workspace::check_uniform_hash() const {
  std::string first, first_file;
  for (const auto &e : std::filesystem::recursive_directory_iterator(dir_)) {
    if (!e.is_regular_file() || e.path().extension() != ".meta") continue;
    auto artifact = e.path();
    artifact.replace_extension();
    const ArtifactMeta m = read_meta(artifact);
    if (first_file.empty()) {
      first = m.config_hash;
      first_file = artifact.string();
    } else if (m.config_hash != first) {
      throw UsageError("mixed config hashes: " + first_file + " has " + first + ", " +
                       artifact.string() + " has " + m.config_hash);
    }
  }
}

RunLog &Workspace::log() {
  if (!log_) log_ = std::make_unique<RunLog>(dir_ / "run.log");
  return *log_;
}

std::vector<Segment> Workspace::load_segments() const {
  require(kSegmentsFile);
  return SegmentSet::load(path(kSegmentsFile)).segments;
}

std::string feature_file_name(std::size_t segment_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.vqft", segment_index);
  return buf;
}

std::vector<FeatureMatrix> Workspace::load_features(const std::vector<Segment> &segs) const {
  require(kFeatureDir);
  std::vector<FeatureMatrix> out;
  out.reserve(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i)
    out.push_back(read_feature_cache(path(kFeatureDir) / feature_file_name(i)));
  return out;
}

std::vector<BaselineFeatureVector> Workspace::load_baseline(const std::vector<Segment> &segs) const {
  if (!cfg_.run_baseline) return {};
  require(kBaselineFile);
  return read_baseline_tsv(path(kBaselineFile), segs);
}

std::shared_ptr<const DiagonalGmm> Workspace::load_ubm() const {
  require(kUbmFile);
  return std::make_shared<const DiagonalGmm>(DiagonalGmm::load(path(kUbmFile)));
}

void write_baseline_tsv(const std::filesystem::path &path, const std::vector<Segment> &segs,
                        const std::vector<BaselineFeatureVector> &v) {
  if (segs.size() != v.size()) throw UsageError("baseline vectors do not match segments");
  std::ostringstream os;
  os << "id";
  for (const auto &n : BaselineFeatureVector::names()) os << '\t' << n;
  os << "\twarnings\n";
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    os << segs[i].id();
    for (double x : v[i].values) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      os << '\t' << buf;
    }
    os << '\t' << v[i].warnings << '\n';
  }
  write_text_file(path, os.str());
}

std::vector<BaselineFeatureVector> read_baseline_tsv(const std::filesystem::path &path,
                                                     const std::vector<Segment> &segs) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<BaselineFeatureVector> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, tok;
    std::getline(ss, id, '\t');
    if (out.size() >= segs.size() || id != segs[out.size()].id())
      throw DataError("baseline row " + id + " does not match the segment list");
    BaselineFeatureVector b;
    try {
      for (auto &x : b.values) {
        if (!std::getline(ss, tok, '\t')) throw DataError("short baseline row " + id);
        x = std::stod(tok);
      }
      if (!std::getline(ss, tok, '\t')) throw DataError("short baseline row " + id);
      b.warnings = static_cast<unsigned>(std::stoul(tok));
    } catch (const std::invalid_argument &) {
      throw DataError("malformed baseline row " + id);
    } catch (const std::out_of_range &) {
      throw DataError("malformed baseline row " + id);
    }
    out.push_back(b);
  }
  if (out.size() != segs.size()) throw DataError("baseline file does not cover every segment");
  return out;
}

}  // namespace vqid
