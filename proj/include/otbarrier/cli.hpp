#pragma once

#include <iosfwd>

namespace otb {

enum ExitCode : int {
  kExitOk = 0,
  kExitNotCertified = 2,
  kExitInputError = 3,
  kExitInternalError = 4,
};

/// Entry point of the `otb` command: solve, validate, generate, bench.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace otb
