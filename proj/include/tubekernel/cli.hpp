#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tubekernel {

// Runs the command line (args excludes the program name). Exit codes: 0 on
// success, 1 when a check fails or is inconclusive or a computation fails,
// 2 on usage errors and malformed input files.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tubekernel
