#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsvf::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kData = 3,
  kNumeric = 4,
};

/// Runs one subcommand: mzi, weakvalue, kinematics, tof-reduce, deficit,
/// synth, fit. `args` excludes the program name. Streams are injected so the
/// front end can be driven from tests.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace tsvf::cli
