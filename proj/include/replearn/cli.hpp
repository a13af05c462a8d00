// Copyright 2026 The replearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Command-line front end: one subcommand per module, CSV by default and a
// single JSON document with --json.

#include <iosfwd>

namespace replearn::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kResource = 2,
  kVerification = 3,
};

// Parses argv and runs one of: learn, replicate, sweep, mode, spectrum,
// expansion, tail, coupling, step-verify, balls, lo-check. Reports go to out
// (or --out PATH), diagnostics to err.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace replearn::cli
