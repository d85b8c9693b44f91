#pragma once

#include <iosfwd>

namespace sirmarket {

enum ExitStatus : int { exit_ok = 0, exit_failed = 1, exit_usage = 2, exit_numerical = 3 };

/// Entry point of the `sirmarket` executable. Logs go to `err`, data to files
/// (and to `out` for the verify summary).
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sirmarket
