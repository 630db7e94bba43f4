/*
 * Copyright 2026 The hscurate Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef HSCURATE_CLI_H_
#define HSCURATE_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace hscurate::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitAborted = 2,
  kExitOracleFailure = 3,
};

// args[0] is the program name. Normal output goes to out; usage text and
// parse errors to err; logs to stderr as JSON lines.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace hscurate::cli

#endif  // HSCURATE_CLI_H_
