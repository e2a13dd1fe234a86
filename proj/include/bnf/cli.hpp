#pragma once

#include <ostream>

namespace bnf {

/// Exit codes of the command line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitNumeric = 2,
    kExitVerifyFailed = 3,
};

/// Parses argv and runs one subcommand. Reports are written to out, error
/// JSON to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bnf
