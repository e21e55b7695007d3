#pragma once

// Command-line front end: generate / solve / certify / predict / sweep.

#include <iosfwd>
#include <string>
#include <vector>

namespace kdc::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kValidation = 2,
  kParse = 3,
  kDimension = 4,
  kGap = 5,
  kWrite = 6,
  kNumerical = 7,
};

/// Runs one invocation. `args` excludes the program name. Data artifacts go to
/// files or `out`; logs and errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kdc::cli
