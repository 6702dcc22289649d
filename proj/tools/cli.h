// Copyright 2026 The choicegate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CHOICEGATE_TOOLS_CLI_H_
#define CHOICEGATE_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace choicegate::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;  // bad flags or config, nothing was run
inline constexpr int kRunError = 2;    // a load or backend step failed
inline constexpr int kPartial = 3;     // finished, but some records failed

// Runs the command line `args` (without the program name).
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace choicegate::cli

#endif  // CHOICEGATE_TOOLS_CLI_H_
