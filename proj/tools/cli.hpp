#pragma once

#include <ostream>

namespace vfxopt::cli {

/// Exit codes, one per error category.
enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kIo = 3,
  kNumerical = 4,
  kBackend = 5,
  kInvalid = 6, // validation and format errors
};

int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace vfxopt::cli
