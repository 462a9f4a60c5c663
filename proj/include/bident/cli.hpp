#pragma once

#include <ostream>
#include <span>
#include <string>

namespace bident::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitBackend = 2;

// Runs one command line (without the program name). Diagnostics go to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace bident::cli
