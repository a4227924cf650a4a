#pragma once

#include <iosfwd>

namespace nez::cli {

enum ExitCode : int {
    Success = 0,
    InputFailure = 1,
    GrammarFailure = 2,
};

/// Runs the `nez` command line. Streams are injected so tests can drive it
/// in-process; the return value is the process exit status.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace nez::cli
