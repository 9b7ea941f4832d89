#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace d2wfp::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kEmptyCase = 3, kIntegrity = 4 };

inline constexpr const char* kDefaultWorkspace = "d2wfp-workspace";

/// Runs one command line (without the program name) and returns its exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace d2wfp::cli
