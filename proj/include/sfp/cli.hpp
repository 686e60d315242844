#pragma once

// Command-line front end. Exit codes: 0 success, 1 domain errors,
// 2 configuration / parse errors. Errors print one line to stderr as
// "error: <class>: <message>". All outputs are deterministic for a fixed
// (config, seed) pair; files are written atomically.

namespace sfp::cli {

int run_cli(int argc, const char* const* argv);

}  // namespace sfp::cli
