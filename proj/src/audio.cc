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

#include "vqid/audio.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "vqid/error.h"

namespace vqid {

void AudioClip::validate() const {
  if (sample_rate_hz <= 0)
    throw DataError("clip '" + source_id + "': sample rate must be positive");
  if (samples.empty()) throw DataError("clip '" + source_id + "' is empty");
  for (double s : samples)
    if (!std::isfinite(s))
      throw DataError("clip '" + source_id + "' has non-finite samples");
}

AudioClip slice(const AudioClip &clip, std::size_t begin, std::size_t count,
                std::string source_id) {
  if (begin + count > clip.samples.size())
    throw DataError("slice [" + std::to_string(begin) + ", " +
                    std::to_string(begin + count) + ") exceeds clip '" +
                    clip.source_id + "'");
  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.source_id = std::move(source_id);
  out.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

namespace {

std::uint32_t le32(const unsigned char *p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t le16(const unsigned char *p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put32(std::string &s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put16(std::string &s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

}  // namespace

AudioClip read_wav(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string where = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw DataError("not a RIFF/WAVE file: " + where);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char *data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *chunk = bytes.data() + pos;
    std::uint32_t len = le32(chunk + 4);
    std::size_t body = pos + 8;
    std::size_t avail = std::min<std::size_t>(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw DataError("short fmt chunk: " + where);
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      if (format == kFormatExtensible && avail >= 26)
        format = le16(chunk + 8 + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = avail;
    }
    pos = body + len + (len & 1);
  }
  if (channels == 0 || data == nullptr)
    throw DataError("missing fmt or data chunk: " + where);
  if (channels != 1)
    throw DataError("only mono audio is supported (" + std::to_string(channels) +
                    " channels): " + where);
  if (rate == 0) throw DataError("zero sample rate: " + where);

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(rate);
  clip.source_id = path.string();
  if (format == kFormatPcm && bits == 16) {
    std::size_t n = data_len / 2;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      clip.samples[i] = static_cast<std::int16_t>(le16(data + 2 * i)) / 32768.0;
  } else if (format == kFormatFloat && bits == 32) {
    std::size_t n = data_len / 4;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u = le32(data + 4 * i);
      float f;
      std::memcpy(&f, &u, 4);
      clip.samples[i] = f;
    }
  } else {
    throw DataError("unsupported WAV encoding (format " + std::to_string(format) +
                    ", " + std::to_string(bits) + " bits): " + where);
  }
  return clip;
}

void write_wav_pcm16(const std::filesystem::path &path, const AudioClip &clip) {
  if (clip.sample_rate_hz <= 0) throw UsageError("sample rate must be positive");
  const std::uint32_t data_len = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::string buf;
  buf.reserve(44 + data_len);
  buf += "RIFF";
  put32(buf, 36 + data_len);
  buf += "WAVEfmt ";
  put32(buf, 16);
  put16(buf, kFormatPcm);
  put16(buf, 1);
  put32(buf, static_cast<std::uint32_t>(clip.sample_rate_hz));
  put32(buf, static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  put16(buf, 2);
  put16(buf, 16);
  buf += "data";
  put32(buf, data_len);
  for (double s : clip.samples) {
    double c = std::clamp(s, -1.0, 1.0) * 32767.0;
    put16(buf, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c))));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace vqid
