#pragma once

#include <iosfwd>

namespace ipgp::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,      // numeric or integration failure
  kInputError = 2,
  kOptimizationFailure = 3,
  kConsistencyFailure = 4,
};

/// Runs one command line; everything is written under --out.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ipgp::cli
