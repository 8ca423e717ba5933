#pragma once

#include <string>
#include <vector>

namespace p2ps::cli {

/// Entry point shared by the binary and the in-process tests. `args`
/// excludes the program name. Exit codes: 0 success, 2 configuration
/// errors (including flag parse failures), 3 data or file errors,
/// 4 training divergence (non-finite loss).
int run_cli(const std::vector<std::string>& args);

}  // namespace p2ps::cli
