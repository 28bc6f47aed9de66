#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace patchnet::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitParse = 3;
inline constexpr int kExitAlignment = 4;
inline constexpr int kExitEquivalence = 5;
inline constexpr int kExitFrameErrors = 6;
inline constexpr int kExitIo = 7;

/// Runs one invocation; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace patchnet::cli
