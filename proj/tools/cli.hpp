#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ssmamba::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfigError = 2,
  kDataError = 3,
  kTrainingAborted = 4,
};

// Runs one `ssmamba` invocation. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssmamba::cli
