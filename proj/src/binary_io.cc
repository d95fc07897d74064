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

#include "vqid/binary_io.h"

#include <cstring>
#include <vector>

#include "vqid/error.h"

namespace vqid {

BinaryWriter::BinaryWriter(const std::filesystem::path &path,
                           std::string_view magic, std::uint32_t version)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw DataError("cannot open for writing: " + path.string());
  out_.write(magic.data(), 4);
  u32(version);
}

void BinaryWriter::u32(std::uint32_t v) {
  out_.write(reinterpret_cast<const char *>(&v), sizeof v);
}
void BinaryWriter::u64(std::uint64_t v) {
  out_.write(reinterpret_cast<const char *>(&v), sizeof v);
}
void BinaryWriter::f64(double v) {
  out_.write(reinterpret_cast<const char *>(&v), sizeof v);
}
void BinaryWriter::str(const std::string &s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void BinaryWriter::vec(const Eigen::VectorXd &v) {
  out_.write(reinterpret_cast<const char *>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}
void BinaryWriter::mat_row_major(const Eigen::MatrixXd &m) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out_.write(reinterpret_cast<const char *>(rm.data()),
             static_cast<std::streamsize>(rm.size() * sizeof(double)));
}
void BinaryWriter::close() {
  out_.close();
  if (!out_) throw DataError("write failed: " + path_.string());
}

BinaryReader::BinaryReader(const std::filesystem::path &path,
                           std::string_view magic)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw DataError("missing artifact: " + path.string());
  char got[4];
  read_bytes(got, 4);
  if (std::memcmp(got, magic.data(), 4) != 0)
    throw DataError("bad magic in " + path.string() + " (expected " +
                    std::string(magic) + ")");
  version_ = u32();
}

void BinaryReader::read_bytes(void *dst, std::size_t n) {
  in_.read(static_cast<char *>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n)
    throw DataError("truncated file: " + path_.string());
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  read_bytes(&v, sizeof v);
  return v;
}
std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  read_bytes(&v, sizeof v);
  return v;
}
double BinaryReader::f64() {
  double v;
  read_bytes(&v, sizeof v);
  return v;
}
std::string BinaryReader::str() {
  std::uint32_t n = u32();
  if (n > (1u << 20)) throw DataError("implausible string length in " + path_.string());
  std::string s(n, '\0');
  read_bytes(s.data(), n);
  return s;
}
Eigen::VectorXd BinaryReader::vec(Eigen::Index n) {
  Eigen::VectorXd v(n);
  read_bytes(v.data(), static_cast<std::size_t>(n) * sizeof(double));
  return v;
}
Eigen::MatrixXd BinaryReader::mat_row_major(Eigen::Index rows,
                                            Eigen::Index cols) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows,
                                                                            cols);
  read_bytes(rm.data(), static_cast<std::size_t>(rows * cols) * sizeof(double));
  return rm;
}
void BinaryReader::expect_end() {
  if (in_.peek() != std::ifstream::traits_type::eof())
    throw DataError("trailing bytes in " + path_.string());
}

}  // namespace vqid
