#pragma once

#include <iosfwd>

namespace palmrt::cli {

/// Entry point behind the `palmrt` binary. Exit codes: 0 success, 1 failed
/// checks (check subcommand), 2 malformed input or flags, 3 numerical
/// failure. Reports go to `out` (default stdout) unless an output path is
/// given; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace palmrt::cli
