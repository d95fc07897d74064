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

#ifndef VQID_AUDIO_H_
#define VQID_AUDIO_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace vqid {

// Mono PCM audio normalized to [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = 44100;
  std::string source_id;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  // Throws DataError for an empty clip, a non-positive rate or non-finite
  // samples.
  void validate() const;
};

// Copies samples [begin, begin + count) into a new clip.
AudioClip slice(const AudioClip &clip, std::size_t begin, std::size_t count,
                std::string source_id);

// Reads a mono RIFF/WAVE file holding 16-bit integer PCM or 32-bit IEEE float
// samples. Multi-channel files and other encodings are rejected.
AudioClip read_wav(const std::filesystem::path &path);

// Writes 16-bit PCM mono. Samples are clipped to [-1, 1] and rounded to the
// nearest integer level, so the output is a deterministic function of input.
void write_wav_pcm16(const std::filesystem::path &path, const AudioClip &clip);

}  // namespace vqid

#endif  // VQID_AUDIO_H_
