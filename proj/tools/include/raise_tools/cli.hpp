#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace raisesql::cli {

enum ExitCode : int { kOk = 0, kPartialFailure = 1, kConfigError = 2 };

/// Runs one command line (without the program name). Reports go to `out`,
/// diagnostics to `err`. Never throws.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace raisesql::cli
