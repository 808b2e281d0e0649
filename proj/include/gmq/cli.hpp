#pragma once

namespace gmq {

// Full command-line front end. Returns the process exit code:
// 0 success (budget-exceeded findings are values, not failures),
// 2 configuration / usage errors, 3 budget violations on required paths,
// 1 anything else.
int run_cli(int argc, char** argv);

}  // namespace gmq
