// Copyright 2026 The incdial Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef INCDIAL_CLI_HPP
#define INCDIAL_CLI_HPP

#include <istream>
#include <ostream>

namespace incdial::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kRuntimeError = 4 };

// Entry point of the `incdial` tool with injectable streams.  Chat polls
// the terminal for interruptions only when `in` is std::cin on a tty.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace incdial::cli

#endif  // INCDIAL_CLI_HPP
