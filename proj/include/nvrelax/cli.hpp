#pragma once

#include <iosfwd>

namespace nvrelax {

// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitValidation = 2,
  kExitNonConvergence = 3,
  kExitIo = 4,
};

/// Entry point for the nvrelax command line; returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nvrelax
