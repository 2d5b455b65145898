#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gatescope {

/// Exit codes of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_nothing_found = 1, exit_usage = 2, exit_input = 3 };

/// Runs the command line `args` (args[0] is the program name).
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gatescope
