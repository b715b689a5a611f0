#pragma once

#include <iosfwd>

namespace regulus {

/// Exit codes: 0 success, 1 failed verification checks, 2 invalid configuration,
/// 3 numerical failure (diagnostic JSON on err).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace regulus
