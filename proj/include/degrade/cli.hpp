#pragma once

#include <iosfwd>

namespace degrade {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;       // bad flag, bad input file
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitTimeLimit = 4;
inline constexpr int kExitOracle = 5;      // an Optimal solution failed the separation check

/// Entry point of the degrade_cr tool: generate, resolve, verify, batch,
/// report, export-lp. Output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace degrade
