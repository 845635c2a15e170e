#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace slle::cli {

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kInvalidConfig = 1,  // bad flags, config file, input data or IO
  kNumerical = 2,      // numerical failure during fitting
  kVerifyFailed = 3,   // `verify` found a failing check
};

/// Replaces `--config <file>` by the file's key=value pairs rendered as
/// `--key=value` tokens placed right after the subcommand, so flags given on
/// the command line (which come later) take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

/// Entry point of the `slle` tool. `args` excludes the program name. Results
/// go to files, a summary to `out`, progress and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace slle::cli
