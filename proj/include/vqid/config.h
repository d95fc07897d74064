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

#ifndef VQID_CONFIG_H_
#define VQID_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace vqid {

// Flat `key = value` configuration. Lines starting with '#' are comments;
// `include <path>` splices another file (relative to the including file)
// at that point, and later assignments override earlier ones. Environment
// variables named VQID_<KEY> (key upper-cased) override file values when
// loading with apply_env.
class Config {
 public:
  static constexpr const char *kEnvPrefix = "VQID_";

  static Config load(const std::filesystem::path &path, bool apply_env = true);
  static Config parse(const std::string &text,
                      const std::filesystem::path &base_dir = ".");

  void set(const std::string &key, const std::string &value);
  bool has(const std::string &key) const;
  const std::map<std::string, std::string> &entries() const { return entries_; }

  // Getters throw UsageError when the key is missing or malformed.
  std::string get(const std::string &key) const;
  double get_double(const std::string &key) const;
  long get_int(const std::string &key) const;
  bool get_bool(const std::string &key) const;
  std::vector<std::string> get_list(const std::string &key) const;

  std::string get(const std::string &key, const std::string &fallback) const;
  double get_double(const std::string &key, double fallback) const;
  long get_int(const std::string &key, long fallback) const;
  bool get_bool(const std::string &key, bool fallback) const;

  // Environment overrides for every known key, plus any VQID_* variable that
  // names a key not yet present.
  void apply_env();

  // Sorted `key=value` lines, excluding keys that do not affect results
  // (threads, verbosity, paths to inputs and outputs).
  std::string canonical() const;
  std::uint64_t hash() const;
  std::string hash_hex() const;

 private:
  void parse_into(const std::string &text, const std::filesystem::path &base_dir,
                  int depth);
  std::map<std::string, std::string> entries_;
};

std::uint64_t fnv1a64(const std::string &data, std::uint64_t seed = 14695981039346656037ull);
std::string to_hex(std::uint64_t v);

}  // namespace vqid

#endif  // VQID_CONFIG_H_
