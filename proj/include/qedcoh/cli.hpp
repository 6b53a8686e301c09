#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qedcoh::cli {

/// Process exit codes.
enum ExitCode : int
{
  kSuccess = 0,
  kVerificationFailed = 1,
  kInvalidInput = 2,
  kNonConvergence = 3,
};

/// Runs the command line `args` (program name first). Reports and CSV go
/// to `out` unless --out names a file; diagnostics go to `err`. Returns an
/// ExitCode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace qedcoh::cli
