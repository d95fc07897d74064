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

#include "vqid/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vqid/error.h"

namespace vqid {

namespace {

std::vector<std::string> split_tabs(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

void check_id(const std::string &id, const char *what) {
  if (id.empty() || id.find_first_of("\t\n/\\,") != std::string::npos || id == "." || id == "..")
    throw DataError(std::string("invalid ") + what + " '" + id + "'");
}

double parse_double(const std::string &s, const std::filesystem::path &file, int line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw DataError(file.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
}

long long parse_int(const std::string &s, const std::filesystem::path &file, int line) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw DataError(file.string() + ":" + std::to_string(line) + ": bad integer '" + s + "'");
  }
}

std::filesystem::path relative_to(const std::filesystem::path &p, const std::filesystem::path &dir) {
  if (p.is_relative()) return p;
  std::filesystem::path rel = p.lexically_relative(std::filesystem::absolute(dir));
  return rel.empty() ? p : rel;
}

std::filesystem::path resolve(const std::filesystem::path &p, const std::filesystem::path &dir) {
  return p.is_absolute() ? p : (dir / p).lexically_normal();
}

std::int64_t to_samples(double seconds, int rate) {
  return static_cast<std::int64_t>(std::floor(seconds * rate + 0.5));
}

// Reads non-comment lines, tracking line numbers.
template <typename Fn>
void for_each_record(const std::filesystem::path &path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest " + path.string());
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fn(split_tabs(line), no);
  }
}

}  // namespace

bool is_quality(std::string_view q) {
  return std::find(kQualities.begin(), kQualities.end(), q) != kQualities.end();
}

void RecordingManifest::validate() const {
  std::set<std::pair<std::string, std::string>> seen;
  for (const Recording &r : entries) {
    check_id(r.speaker, "speaker id");
    if (!is_quality(r.quality)) throw DataError("unknown voice quality '" + r.quality + "'");
    if (!seen.emplace(r.speaker, r.quality).second)
      throw DataError("duplicate recording for " + r.speaker + "/" + r.quality);
    if (r.sample_rate_hz <= 0) throw DataError("non-positive sample rate for " + r.path.string());
  }
}

std::vector<std::string> RecordingManifest::speakers() const {
  std::set<std::string> s;
  for (const Recording &r : entries) s.insert(r.speaker);
  return {s.begin(), s.end()};
}

void RecordingManifest::save(const std::filesystem::path &path) const {
  validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  const std::filesystem::path dir = path.parent_path().empty() ? "." : path.parent_path();
  out << "# speaker\tquality\tpath\tduration_s\tsample_rate_hz\n";
  char buf[64];
  for (const Recording &r : entries) {
    std::snprintf(buf, sizeof buf, "%.6f", r.duration_s);
    out << r.speaker << '\t' << r.quality << '\t' << relative_to(r.path, dir).generic_string()
        << '\t' << buf << '\t' << r.sample_rate_hz << '\n';
  }
  if (!out) throw DataError("failed writing manifest " + path.string());
}

RecordingManifest RecordingManifest::load(const std::filesystem::path &path) {
  RecordingManifest m;
  const std::filesystem::path dir = path.parent_path().empty() ? "." : path.parent_path();
  for_each_record(path, [&](const std::vector<std::string> &f, int no) {
    if (f.size() != 5)
      throw DataError(path.string() + ":" + std::to_string(no) + ": expected 5 fields");
    Recording r;
    r.speaker = f[0];
    r.quality = f[1];
    r.path = resolve(f[2], dir);
    r.duration_s = parse_double(f[3], path, no);
    r.sample_rate_hz = static_cast<int>(parse_int(f[4], path, no));
    m.entries.push_back(std::move(r));
  });
  m.validate();
  return m;
}

RecordingManifest scan_corpus_directory(const std::filesystem::path &root) {
  if (!std::filesystem::is_directory(root))
    throw DataError("corpus directory not found: " + root.string());
  std::vector<std::filesystem::path> speakers;
  for (const auto &e : std::filesystem::directory_iterator(root))
    if (e.is_directory()) speakers.push_back(e.path());
  std::sort(speakers.begin(), speakers.end());
  RecordingManifest m;
  for (const auto &dir : speakers) {
    for (std::string_view q : kQualities) {
      std::filesystem::path wav = dir / (std::string(q) + ".wav");
      if (!std::filesystem::exists(wav)) continue;
      AudioClip clip = read_wav(wav);
      m.entries.push_back({dir.filename().string(), std::string(q), wav, clip.duration_s(),
                           clip.sample_rate_hz});
    }
  }
  if (m.entries.empty()) throw DataError("no {speaker}/{quality}.wav files under " + root.string());
  m.validate();
  return m;
}

const char *role_name(SegmentRole r) {
  switch (r) {
    case SegmentRole::kTrain: return "train";
    case SegmentRole::kTest: return "test";
    case SegmentRole::kUnassigned: return "unassigned";
  }
  return "unassigned";
}

SegmentRole parse_role(const std::string &s) {
  if (s == "train") return SegmentRole::kTrain;
  if (s == "test") return SegmentRole::kTest;
  if (s == "unassigned") return SegmentRole::kUnassigned;
  throw DataError("unknown segment role '" + s + "'");
}

int Segment::length_label() const { return static_cast<int>(std::lround(length_s())); }

std::string Segment::id() const {
  return speaker + "/" + quality + "/" + std::to_string(length_label()) + "s/" +
         std::to_string(index);
}

void SegmentSet::save(const std::filesystem::path &path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write segment manifest " + path.string());
  const std::filesystem::path dir = path.parent_path().empty() ? "." : path.parent_path();
  out << "# speaker\tquality\trecording\tindex\tstart_sample\tlength_samples\t"
         "sample_rate_hz\trole\tparent_index\n";
  for (const Segment &s : segments) {
    out << s.speaker << '\t' << s.quality << '\t' << relative_to(s.recording, dir).generic_string()
        << '\t' << s.index << '\t' << s.start_sample << '\t' << s.length_samples << '\t'
        << s.sample_rate_hz << '\t' << role_name(s.role) << '\t' << s.parent_index << '\n';
  }
  if (!out) throw DataError("failed writing segment manifest " + path.string());
}

SegmentSet SegmentSet::load(const std::filesystem::path &path) {
  SegmentSet set;
  const std::filesystem::path dir = path.parent_path().empty() ? "." : path.parent_path();
  for_each_record(path, [&](const std::vector<std::string> &f, int no) {
    if (f.size() != 9)
      throw DataError(path.string() + ":" + std::to_string(no) + ": expected 9 fields");
    Segment s;
    s.speaker = f[0];
    s.quality = f[1];
    check_id(s.speaker, "speaker id");
    if (!is_quality(s.quality)) throw DataError("unknown voice quality '" + s.quality + "'");
    s.recording = resolve(f[2], dir);
    s.index = static_cast<int>(parse_int(f[3], path, no));
    s.start_sample = parse_int(f[4], path, no);
    s.length_samples = parse_int(f[5], path, no);
    s.sample_rate_hz = static_cast<int>(parse_int(f[6], path, no));
    s.role = parse_role(f[7]);
    s.parent_index = static_cast<int>(parse_int(f[8], path, no));
    if (s.start_sample < 0 || s.length_samples <= 0 || s.sample_rate_hz <= 0)
      throw DataError(path.string() + ":" + std::to_string(no) + ": invalid segment bounds");
    set.segments.push_back(std::move(s));
  });
  return set;
}

SegmentSet trim_and_segment(const AudioClip &clip, const Recording &rec,
                            const SegmentConfig &cfg) {
  if (!(cfg.trim_s >= 0.0) || !(cfg.segment_s > 0.0))
    throw UsageError("trim must be >= 0 and segment length > 0");
  const int rate = clip.sample_rate_hz;
  const std::int64_t n = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t trim = to_samples(cfg.trim_s, rate);
  const std::int64_t seg = to_samples(cfg.segment_s, rate);
  const std::int64_t usable = n - 2 * trim;
  if (cfg.max_segments < 0) throw UsageError("max_segments must be >= 0");
  std::int64_t count = usable > 0 ? usable / seg : 0;
  if (cfg.max_segments > 0) count = std::min<std::int64_t>(count, cfg.max_segments);
  if (count < 1 && !cfg.allow_empty) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "recording %s is %.3f s; needs at least %.3f s for one %.3f s segment",
                  rec.path.string().c_str(), clip.duration_s(), 2 * cfg.trim_s + cfg.segment_s,
                  cfg.segment_s);
    throw DataError(buf);
  }
  SegmentSet out;
  for (std::int64_t i = 0; i < count; ++i) {
    Segment s;
    s.speaker = rec.speaker;
    s.quality = rec.quality;
    s.recording = rec.path;
    s.index = static_cast<int>(i);
    s.start_sample = trim + i * seg;
    s.length_samples = seg;
    s.sample_rate_hz = rate;
    out.segments.push_back(std::move(s));
  }
  return out;
}

SegmentSet split_train_test(const SegmentSet &segs, int n_train) {
  if (n_train < 1) throw UsageError("n_train must be positive");
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < segs.segments.size(); ++i)
    groups[{segs.segments[i].speaker, segs.segments[i].quality}].push_back(i);
  SegmentSet out = segs;
  for (auto &[key, idx] : groups) {
    if (static_cast<int>(idx.size()) <= n_train)
      throw DataError(key.first + "/" + key.second + " has " + std::to_string(idx.size()) +
                      " segments; the split needs more than " + std::to_string(n_train));
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return segs.segments[a].start_sample < segs.segments[b].start_sample;
    });
    for (std::size_t k = 0; k < idx.size(); ++k)
      out.segments[idx[k]].role =
          static_cast<int>(k) < n_train ? SegmentRole::kTrain : SegmentRole::kTest;
  }
  return out;
}

SegmentSet resegment_test(const SegmentSet &segs, double target_s, double source_s) {
  if (!(target_s > 0.0)) throw UsageError("target segment length must be positive");
  SegmentSet out;
  std::map<std::pair<std::string, std::string>, int> next_index;
  for (const Segment &s : segs.segments) {
    if (s.role != SegmentRole::kTest)
      throw UsageError("only test segments can be resegmented; " + s.id() + " is " +
                       role_name(s.role));
    if (s.length_samples != to_samples(source_s, s.sample_rate_hz))
      throw UsageError("segment " + s.id() + " is not " + std::to_string(source_s) + " s long");
    const std::int64_t child = to_samples(target_s, s.sample_rate_hz);
    if (child <= 0 || child > s.length_samples || s.length_samples % child != 0)
      throw UsageError("target length does not divide the source segment evenly");
    int &next = next_index[{s.speaker, s.quality}];
    for (std::int64_t off = 0; off < s.length_samples; off += child) {
      Segment c = s;
      c.start_sample = s.start_sample + off;
      c.length_samples = child;
      c.index = next++;
      c.parent_index = s.index;
      out.segments.push_back(std::move(c));
    }
  }
  return out;
}

AudioClip extract_segment(const AudioClip &parent, const Segment &seg) {
  if (parent.sample_rate_hz != seg.sample_rate_hz)
    throw DataError("segment " + seg.id() + " sample rate does not match its recording");
  if (seg.start_sample < 0 ||
      seg.start_sample + seg.length_samples > static_cast<std::int64_t>(parent.samples.size()))
    throw DataError("segment " + seg.id() + " lies outside its recording");
  return slice(parent, static_cast<std::size_t>(seg.start_sample),
               static_cast<std::size_t>(seg.length_samples), seg.id());
}

}  // namespace vqid
