#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace provrefine {

// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitYes = 0,
    kExitNo = 1,     // answer no, or hard constraints unsatisfiable
    kExitUsage = 2,  // bad flags, unreadable or malformed input
    kExitDomain = 3,
    kExitLimit = 4,  // iteration, budget or enumeration limit
};

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace provrefine
