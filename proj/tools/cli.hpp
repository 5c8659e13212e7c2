#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace varfrac::cli {

enum ExitCode { ok = 0, usage = 2, failed = 3, budget = 4 };

// Runs the command line args (without the program name) and returns the
// process exit code. Normal output goes to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Shortest round-trip text of v limited to 15 significant digits.
std::string format_number(double v);

} // namespace varfrac::cli
