#pragma once

#include <iosfwd>

namespace ltrajdiff {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDivergence = 3;

// Entry point of the ltrajdiff binary; returns the process exit code.
int run_cli(int argc, char** argv);
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ltrajdiff
