// Copyright 2026 The CHILD Teleop Authors
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

#ifndef CHILD_TOOLS_CLI_H_
#define CHILD_TOOLS_CLI_H_

#include <atomic>
#include <ostream>

namespace child::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `child` binary. `stop` ends long-running commands
// early (the binary wires it to SIGINT/SIGTERM).
int Main(int argc, const char* const* argv, std::ostream& out,
         std::ostream& err, const std::atomic<bool>& stop);

}  // namespace child::cli

#endif  // CHILD_TOOLS_CLI_H_
