#pragma once

#include <ostream>

namespace evdet {

/// Entry point of the `evdet` command-line tool. Returns the process exit
/// code; diagnostics go to `err` as a single line.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace evdet
