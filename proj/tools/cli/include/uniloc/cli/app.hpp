#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uniloc::cli {

enum ExitCode : int {
    exitOk = 0,
    exitConfig = 2,
    exitData = 3,
    exitTraining = 4,
    exitEvaluation = 5,
};

// Runs one `uniloc` command. args excludes the program name. Human-readable progress and
// tables go to out, diagnostics to err; artifacts are written under the configured paths.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace uniloc::cli
