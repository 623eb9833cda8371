// Copyright 2026 The nglm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NGLM_TOOLS_CLI_H_
#define NGLM_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace nglm::cli {

// Runs one subcommand. args[0] is the program name. Returns the process exit
// status; failures print a single JSON line {"error": kind, "message": ...}
// to 'err'.
int Run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err);

}  // namespace nglm::cli

#endif  // NGLM_TOOLS_CLI_H_
