#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace crnem::cli {

/// Exit codes: 0 success, 1 verification failed, 2 invalid input, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitMath = 3;

/// Runs one command line; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crnem::cli
