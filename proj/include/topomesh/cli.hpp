#pragma once

#include <string>
#include <vector>

namespace topomesh {

// Runs one CLI invocation (args excludes the program name).
// Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace topomesh
