#pragma once

#include <string>
#include <vector>

namespace shiftbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitComputeError = 3;

/// Runs one CLI invocation (arguments without the program name). JSON goes to
/// stdout, diagnostics to stderr. Returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace shiftbench::cli
