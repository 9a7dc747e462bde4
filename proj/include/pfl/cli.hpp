#pragma once

#include <iosfwd>

namespace pfl {

enum ExitCode : int {
  kExitOk = 0,
  kExitDataError = 1,
  kExitNotConverged = 2,
  kExitEstimationFailed = 3,
  kExitUsage = 64,
};

/// Environment variable naming the default --out-dir.
inline constexpr const char* kOutDirEnv = "PFL_OUT_DIR";

/// Entry point of the `pflearn` tool. argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pfl
