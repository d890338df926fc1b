#pragma once

#include <iosfwd>

namespace buckforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitTuningInfeasible = 3;
inline constexpr int kExitRegulationFailure = 4;

inline constexpr const char* kToolVersion = "0.1.0";

// Entry point of the `buckforge` tool, with injectable streams. Returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace buckforge::cli
