#pragma once

namespace invar::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kInput = 3;
inline constexpr int kSolver = 4;
inline constexpr int kInfeasible = 5;
inline constexpr int kInternal = 1;

/// Parses argv, runs one subcommand and writes its outputs plus
/// manifest.json into --out.
int run(int argc, char** argv);

}  // namespace invar::cli
