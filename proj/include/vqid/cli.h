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

#ifndef VQID_CLI_H_
#define VQID_CLI_H_

#include <ostream>

namespace vqid {

// Parses argv and runs one subcommand. Returns the process exit status:
// 0 ok, 1 usage, 2 data error, 3 numeric failure. Failures print one line
//   error: kind=<usage|data|numeric> message="..."
// to err.
int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace vqid

#endif  // VQID_CLI_H_
