#pragma once

#include <ostream>

namespace xicoal {

/// Runs the command line and returns the process exit code:
/// 0 pass, 1 a check failed, 2 usage or parameter error, 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xicoal
