#pragma once

// Command-line front end. Kept as a library so tests can drive it in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace oid {

enum ExitCode { ExitOk = 0, ExitInput = 2, ExitNumerical = 3 };

/// Runs one command. `args` excludes the program name. Results go to `out`
/// (or the --out file), diagnostics to `err` as lines prefixed "error:" or
/// "warning:". Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace oid
