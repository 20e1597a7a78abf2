#pragma once

#include <iosfwd>

namespace jncf {

// Exit codes of the jncf tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // usage or config error
inline constexpr int kExitData = 2;     // I/O, parse or format error
inline constexpr int kExitNumeric = 3;  // non-finite values during training

// Parses argv and runs one subcommand (prepare, train, evaluate, sparsify,
// benchmark). Reports go to `out`, progress and errors to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jncf
