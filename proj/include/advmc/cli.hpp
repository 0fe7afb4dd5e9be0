#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace advmc {

/// Runs one CLI invocation. Exit codes: 0 success, 1 domain error, 2 usage
/// error; `verify` returns 3 when the model is not robust.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace advmc
