#pragma once

#include <ostream>

namespace wavesmooth {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

/// Entry point of the `wavesmooth` tool; subcommands: simulate, wave-bounds,
/// variance, variance-grid, diagram, replay.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wavesmooth
