#pragma once

#include <iosfwd>

namespace fluxnet::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kNumericalError = 3,
  kIoError = 4,
};

/// Entry point of the `fluxnet` tool. Normal output goes to `out`, progress
/// and diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fluxnet::cli
