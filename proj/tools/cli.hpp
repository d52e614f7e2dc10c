#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ecgbnn::cli {

// Exit codes of every subcommand.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,     // bad flags, invalid values, incompatible model/data
  kIo = 2,        // unreadable or malformed files
  kInternal = 3,  // fusion verification failure and unexpected errors
};

// Runs one invocation; args excludes the program name. Reports go to out,
// diagnostics to err. The ECGBNN_LOG_LEVEL environment variable (quiet,
// info, debug) controls how much reaches err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ecgbnn::cli
