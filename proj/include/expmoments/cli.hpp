#pragma once

// Command-line front end. Exit codes: 0 success, 1 violations or acceptance
// failures, 2 malformed arguments or model literal, 3 domain error or engine
// not applicable, 4 numerical failure (no convergence).

#include <ostream>
#include <string>
#include <vector>

namespace expmoments {

inline constexpr int kSchemaVersion = 1;

/// Runs the command line `args` (program name excluded). Results go to `out`
/// unless --out names a file; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace expmoments
