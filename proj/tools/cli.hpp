#pragma once

#include <iosfwd>

namespace trirast {

/// Entry point of the rastcli tool. Returns the process exit code:
/// 0 ok, 1 parse error, 2 capacity error, 3 I/O error, 4 bench invariant violation.
int runCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace trirast
