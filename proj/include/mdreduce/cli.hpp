// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mdreduce {

// Runs the mdreduce command line (args excludes the program name). Reports
// go to `out`, diagnostics to `err`. Exit codes: 0 success, 1 threshold
// violation, 2 usage error, 3 I/O or parse error.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

} // namespace mdreduce
