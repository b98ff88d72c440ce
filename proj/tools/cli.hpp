#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pdsim::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kRuntime = 4,
};

/// Runs one command line (args[0] is the program name). Human-readable
/// summaries go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pdsim::cli
