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

#ifndef VQID_LOG_H_
#define VQID_LOG_H_

#include <functional>
#include <string>

namespace vqid {

enum class LogLevel { kInfo, kWarning };

using LogSink = std::function<void(LogLevel, const std::string &)>;

// Replaces the process-wide sink. An empty sink restores the default, which
// prints warnings to stderr and drops info lines.
void set_log_sink(LogSink sink);
void log_message(LogLevel level, const std::string &msg);
inline void log_info(const std::string &msg) { log_message(LogLevel::kInfo, msg); }
inline void log_warning(const std::string &msg) { log_message(LogLevel::kWarning, msg); }

// Installs a sink for the lifetime of the guard.
class ScopedLogSink {
 public:
  explicit ScopedLogSink(LogSink sink);
  ~ScopedLogSink();
  ScopedLogSink(const ScopedLogSink &) = delete;
  ScopedLogSink &operator=(const ScopedLogSink &) = delete;

 private:
  LogSink previous_;
};

}  // namespace vqid

#endif  // VQID_LOG_H_
