// cli.hpp - experiment runner entry point shared by the binary and tests.
#pragma once

namespace daur::cli {

// run|sweep subcommands; returns the process exit code
// (0 ok, 1 config/usage error, 2 solver-flagged or budget-exceeded results).
int run_main(int argc, const char* const* argv);

} // namespace daur::cli
