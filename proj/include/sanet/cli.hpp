#pragma once

#include <string>
#include <vector>

namespace sanet {

/// Command-line entry point (arguments exclude the program name).
/// Exit codes: 0 success, 1 usage/configuration error, 2 data/format error,
/// 3 numerical failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace sanet
