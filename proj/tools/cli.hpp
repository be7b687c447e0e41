#pragma once

namespace tearlearn::cli {

/// Parses arguments, runs one subcommand and returns the process exit code.
/// Errors are reported on stderr.
int run(int argc, const char* const* argv);

}  // namespace tearlearn::cli
