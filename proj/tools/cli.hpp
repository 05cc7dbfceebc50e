#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace taplab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitBackendFailure = 3;

/// Entry point of the `taplab` tool; `args[0]` is the program name.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace taplab::cli
