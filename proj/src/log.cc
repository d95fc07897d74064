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

#include "vqid/log.h"

#include <iostream>
#include <mutex>

namespace vqid {

namespace {

std::mutex &sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink &current_sink() {
  static LogSink sink;
  return sink;
}

}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  current_sink() = std::move(sink);
}

void log_message(LogLevel level, const std::string &msg) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (current_sink()) {
    current_sink()(level, msg);
  } else if (level == LogLevel::kWarning) {
    std::cerr << "warning: " << msg << '\n';
  }
}

ScopedLogSink::ScopedLogSink(LogSink sink) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  previous_ = std::move(current_sink());
  current_sink() = std::move(sink);
}

ScopedLogSink::~ScopedLogSink() {
  std::lock_guard<std::mutex> lock(sink_mutex());
  current_sink() = std::move(previous_);
}

}  // namespace vqid
