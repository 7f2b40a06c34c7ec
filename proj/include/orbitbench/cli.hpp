// Command-line entry point: generate, evaluate, report and oracle.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace orbitbench::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidInput = 2,
  kIoFailure = 3,
  kUnknownFrames = 4,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace orbitbench::cli
