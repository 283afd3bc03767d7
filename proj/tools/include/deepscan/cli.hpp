#pragma once

#include <iosfwd>

namespace deepscan::cli {

/// Parses and runs one subcommand. Returns the process exit code; failures
/// print a single `error: ...` line to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace deepscan::cli
