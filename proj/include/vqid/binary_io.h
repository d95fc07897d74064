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

#ifndef VQID_BINARY_IO_H_
#define VQID_BINARY_IO_H_

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

namespace vqid {

static_assert(std::endian::native == std::endian::little,
              "model containers are written in host order and must be little-endian");

// Writer for the fixed-layout model containers: a 4-byte magic, a uint32
// version, then fields in declaration order. Matrices are row-major float64.
class BinaryWriter {
 public:
  BinaryWriter(const std::filesystem::path &path, std::string_view magic,
               std::uint32_t version);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(const std::string &s);  // u32 length + bytes
  void vec(const Eigen::VectorXd &v);
  void mat_row_major(const Eigen::MatrixXd &m);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  // Throws DataError if the file is missing or the magic does not match.
  BinaryReader(const std::filesystem::path &path, std::string_view magic);
  std::uint32_t version() const { return version_; }
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  Eigen::VectorXd vec(Eigen::Index n);
  Eigen::MatrixXd mat_row_major(Eigen::Index rows, Eigen::Index cols);
  // Throws DataError if unread bytes remain.
  void expect_end();

 private:
  void read_bytes(void *dst, std::size_t n);
  std::filesystem::path path_;
  std::ifstream in_;
  std::uint32_t version_ = 0;
};

}  // namespace vqid

#endif  // VQID_BINARY_IO_H_
