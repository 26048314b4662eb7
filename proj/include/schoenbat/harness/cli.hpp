#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace schoenbat::harness {

// Runs `schoenbat <subcommand> [flags]`; `args` excludes the program name.
// Returns 0 on success, 1 on a runtime failure and 2 on a usage or
// configuration error. Without --out the CSV goes to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace schoenbat::harness
