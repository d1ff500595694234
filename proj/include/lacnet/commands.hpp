#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lacnet {

inline constexpr const char* kToolVersion = "0.1.0";

/// Parses `args` (without the program name) and runs one subcommand.
/// Returns the process exit code: 0 ok, 1 usage/config error, 2 data error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lacnet
