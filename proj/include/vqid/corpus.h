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

#ifndef VQID_CORPUS_H_
#define VQID_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vqid/audio.h"

namespace vqid {

inline constexpr std::array<std::string_view, 5> kQualities = {"normal", "breathy", "fry",
                                                               "twang", "hyponasal"};
bool is_quality(std::string_view q);

struct Recording {
  std::string speaker;
  std::string quality;
  std::filesystem::path path;
  double duration_s = 0.0;
  int sample_rate_hz = 44100;
};

// Text manifest, one tab-separated recording per line:
//   speaker  quality  path  duration_s  sample_rate_hz
// Relative paths resolve against the manifest's directory.
struct RecordingManifest {
  std::vector<Recording> entries;

  // Throws DataError on unknown qualities, bad ids or duplicate
  // (speaker, quality) pairs.
  void validate() const;
  std::vector<std::string> speakers() const;  // sorted, unique
  void save(const std::filesystem::path &path) const;
  static RecordingManifest load(const std::filesystem::path &path);
};

// Builds a manifest from a {speaker}/{quality}.wav tree.
RecordingManifest scan_corpus_directory(const std::filesystem::path &root);

enum class SegmentRole { kUnassigned, kTrain, kTest };
const char *role_name(SegmentRole r);
SegmentRole parse_role(const std::string &s);

struct Segment {
  std::string speaker;
  std::string quality;
  std::filesystem::path recording;  // parent audio file
  int index = 0;                    // position among siblings of this length
  std::int64_t start_sample = 0;    // offset into the parent recording
  std::int64_t length_samples = 0;
  int sample_rate_hz = 44100;
  SegmentRole role = SegmentRole::kUnassigned;
  int parent_index = -1;            // long segment a short test clip came from

  double start_s() const { return static_cast<double>(start_sample) / sample_rate_hz; }
  double length_s() const { return static_cast<double>(length_samples) / sample_rate_hz; }
  // Whole seconds of the segment length, e.g. 8, 4 or 2.
  int length_label() const;
  std::string class_label() const { return speaker + "/" + quality; }
  // speaker/quality/<length>s/<index>, unique within a corpus.
  std::string id() const;
};

// Segment manifest, one tab-separated segment per line:
//   speaker quality recording index start_sample length_samples
//   sample_rate_hz role parent_index
struct SegmentSet {
  std::vector<Segment> segments;

  void save(const std::filesystem::path &path) const;
  static SegmentSet load(const std::filesystem::path &path);
};

struct SegmentConfig {
  double trim_s = 30.0;
  double segment_s = 8.0;
  // Keep at most this many segments per recording; 0 keeps all.
  int max_segments = 30;
  // Yield an empty set instead of failing when no full segment fits.
  bool allow_empty = false;
};

// Drops trim_s from both ends and cuts consecutive segment_s windows; the
// remainder and any segments beyond max_segments are discarded. Boundaries
// are whole samples, rounded half up.
SegmentSet trim_and_segment(const AudioClip &clip, const Recording &rec,
                            const SegmentConfig &cfg);

// Per (speaker, quality): the first n_train segments in time order become
// train, the rest test. Throws DataError when a group has <= n_train segments.
SegmentSet split_train_test(const SegmentSet &segs, int n_train);

// Splits every test segment of source_s seconds into equal target_s clips.
// Throws UsageError for train segments, other lengths, or a target that does
// not divide the source.
SegmentSet resegment_test(const SegmentSet &segs, double target_s, double source_s = 8.0);

// Audio of `seg` cut from its parent clip.
AudioClip extract_segment(const AudioClip &parent, const Segment &seg);

struct SynthConfig {
  std::uint64_t seed = 1;
  int speakers = 4;
  double seconds_per_quality = 300.0;
  int sample_rate_hz = 44100;
};

// Deterministic parameters for one synthetic speaker.
struct SyntheticSpeaker {
  std::string id;
  double f0_hz = 180.0;          // speaking F0 centre
  double formant_scale = 1.0;    // vocal tract length factor
  double open_quotient = 0.6;
  double tilt = 0.0;             // extra source low-pass, 0..1
  std::uint64_t seed = 0;
};
SyntheticSpeaker make_synthetic_speaker(std::uint64_t corpus_seed, int index);

// One recording of `speaker` in `quality`, fully determined by the inputs.
AudioClip synthesize_voice(const SyntheticSpeaker &speaker, std::string_view quality,
                           double seconds, int sample_rate_hz = 44100);

// Writes {out_dir}/{speaker}/{quality}.wav for every speaker and quality plus
// {out_dir}/recordings.tsv, and returns the manifest.
RecordingManifest synthesize_corpus(const std::filesystem::path &out_dir,
                                    const SynthConfig &cfg);

}  // namespace vqid

#endif  // VQID_CORPUS_H_
