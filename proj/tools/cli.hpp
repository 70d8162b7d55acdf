// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace homeseq::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

/// Runs one command line (arguments after the program name).
int run(const std::vector<std::string>& args);

}  // namespace homeseq::cli
