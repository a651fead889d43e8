#pragma once

#include <iosfwd>

namespace planmine {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_usage = 2 };

/// Entry point shared by the `planmine` binary and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace planmine
