#pragma once

#include <ostream>

namespace dcemap {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDataError = 2;

/// Parses argv (argv[0] is the program name) and runs one of the `phantom`,
/// `fit`, `slice` or `study` subcommands.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dcemap
