#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace evd::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kConvergenceError = 3, kPartial = 4 };

/// Runs the evd command line. args excludes the program name. Results go to
/// out (or the --out file), diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evd::cli
