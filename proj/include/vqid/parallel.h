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

#ifndef VQID_PARALLEL_H_
#define VQID_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace vqid {

// Process-wide worker count used by parallel_for. Defaults to the number of
// hardware threads.
void set_num_threads(int n);
int num_threads();

// Runs body(i) for i in [0, n). Iterations must write to disjoint outputs;
// callers reduce the per-index results in index order so that results do not
// depend on the thread count. If any iteration throws, the exception from the
// lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body);

}  // namespace vqid

#endif  // VQID_PARALLEL_H_
