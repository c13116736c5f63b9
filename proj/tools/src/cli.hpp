#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gersim {

enum Exit { ok = 0, usage = 1, config_error = 2, infeasible = 3, internal = 4 };

/// Parses argv-style arguments (without the program name) and runs one subcommand.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gersim
