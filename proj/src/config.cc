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

#include "vqid/config.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "vqid/error.h"

extern char **environ;

namespace vqid {

namespace {

std::string trim(const std::string &s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::set<std::string> &unhashed_keys() {
  static const std::set<std::string> keys = {"threads", "verbosity", "manifest",
                                             "output_dir"};
  return keys;
}

}  // namespace

std::uint64_t fnv1a64(const std::string &data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Config Config::load(const std::filesystem::path &path, bool apply_env) {
  Config cfg;
  cfg.parse_into(read_file(path), path.parent_path(), 0);
  if (apply_env) cfg.apply_env();
  return cfg;
}

Config Config::parse(const std::string &text, const std::filesystem::path &base_dir) {
  Config cfg;
  cfg.parse_into(text, base_dir, 0);
  return cfg;
}

void Config::parse_into(const std::string &text,
                        const std::filesystem::path &base_dir, int depth) {
  if (depth > 16) throw UsageError("config include depth exceeds 16 (cycle?)");
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("include", 0) == 0 && line.size() > 7 &&
        std::isspace(static_cast<unsigned char>(line[7]))) {
      std::filesystem::path inc = trim(line.substr(7));
      if (inc.is_relative()) inc = base_dir / inc;
      parse_into(read_file(inc), inc.parent_path(), depth + 1);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) +
                       " is not key = value: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto hash = value.find(" #");
    if (hash != std::string::npos) value = trim(value.substr(0, hash));
    if (key.empty()) throw UsageError("empty key on config line " + std::to_string(lineno));
    entries_[key] = value;
  }
}

void Config::set(const std::string &key, const std::string &value) {
  entries_[key] = value;
}

bool Config::has(const std::string &key) const { return entries_.count(key) > 0; }

std::string Config::get(const std::string &key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw UsageError("missing config key: " + key);
  return it->second;
}

double Config::get_double(const std::string &key) const {
  std::string v = get(key);
  char *end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(d))
    throw UsageError("config key " + key + " is not a finite number: " + v);
  return d;
}

long Config::get_int(const std::string &key) const {
  std::string v = get(key);
  char *end = nullptr;
  long n = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0')
    throw UsageError("config key " + key + " is not an integer: " + v);
  return n;
}

bool Config::get_bool(const std::string &key) const {
  std::string v = get(key);
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError("config key " + key + " is not a boolean: " + v);
}

std::vector<std::string> Config::get_list(const std::string &key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string Config::get(const std::string &key, const std::string &fallback) const {
  return has(key) ? get(key) : fallback;
}
double Config::get_double(const std::string &key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
long Config::get_int(const std::string &key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}
bool Config::get_bool(const std::string &key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

void Config::apply_env() {
  const std::string prefix = kEnvPrefix;
  for (char **env = environ; env && *env; ++env) {
    std::string entry = *env;
    if (entry.rfind(prefix, 0) != 0) continue;
    auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(prefix.size(), eq - prefix.size());
    std::transform(key.begin(), key.end(), key.begin(), ::tolower);
    if (key.empty()) continue;
    entries_[key] = entry.substr(eq + 1);
  }
}

std::string Config::canonical() const {
  std::string out;
  for (const auto &[k, v] : entries_) {
    if (unhashed_keys().count(k)) continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }
std::string Config::hash_hex() const { return to_hex(hash()); }

}  // namespace vqid
