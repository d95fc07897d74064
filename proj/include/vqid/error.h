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

#ifndef VQID_ERROR_H_
#define VQID_ERROR_H_

#include <stdexcept>
#include <string>

namespace vqid {

// Error categories map one-to-one onto the CLI exit codes.
enum class ErrorKind { kUsage = 1, kData = 2, kNumeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

// Bad flags, bad config values, mismatched dimensions between caller inputs.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string &what) : Error(ErrorKind::kUsage, what) {}
};

// Well-formed requests that cannot be served by the data: clips too short,
// missing files, corrupt containers, too few segments.
class DataError : public Error {
 public:
  explicit DataError(const std::string &what) : Error(ErrorKind::kData, what) {}
};

// Non-finite values, singular systems, degenerate scatter.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string &what)
      : Error(ErrorKind::kNumeric, what) {}
};

const char *error_kind_name(ErrorKind kind);

}  // namespace vqid

#endif  // VQID_ERROR_H_
