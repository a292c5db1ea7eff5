#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dbo::cli {

/// Exit codes shared by every subcommand.
enum Exit : int {
  kOk = 0,
  kInvalid = 1,  ///< bad config, bad arguments or malformed input
  kIo = 2,
  kViolations = 3,
};

/// Entry point for `dbo run|sweep|verify|gen-trace ...`. `args` excludes argv[0].
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dbo::cli
