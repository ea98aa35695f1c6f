#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace psmrr::cli {

/// Name of the environment variable that supplies the default output directory.
inline constexpr const char* kOutputDirEnv = "PSMRR_OUTPUT_DIR";

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kParse = 4,
  kInsufficientData = 5,
  kModel = 6,
};

/// Runs one invocation; args excludes the program name. Reports go to the
/// --output file (or $PSMRR_OUTPUT_DIR, or `out`), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace psmrr::cli
