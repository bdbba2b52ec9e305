#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lgspdc::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes: 0 success, 1 library/IO error, 2 usage or config error,
/// 3 partial output (no crossing, iteration cap), flagged in every meta block.
enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kPartial = 3 };

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lgspdc::cli
