#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

namespace quadet::tools {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses "start:step:stop" (inclusive) or a comma-separated list.
std::vector<double> parse_real_grid(const std::string& text);
std::vector<std::size_t> parse_size_list(const std::string& text);

/// Runs the tool with argv-style arguments (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace quadet::tools
