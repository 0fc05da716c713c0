#pragma once

namespace kflk::cli {

// Full command-line entry point. Exit codes: 0 success, 2 configuration
// error, 3 numerical failure.
int run_cli(int argc, char** argv);

}  // namespace kflk::cli
