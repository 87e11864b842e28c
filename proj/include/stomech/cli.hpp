#pragma once

#include <string>
#include <vector>

namespace stomech {

/// Entry point of the command-line tool. Exit codes: 0 success, 1 usage or
/// configuration error, 2 verification failure, 3 numerical failure.
int run_cli(const std::vector<std::string>& args);

} // namespace stomech
