#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace semroute::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;  // invariant, assertion or run failure
inline constexpr int kUsage = 2;    // bad flags, bad config, bad input files

// Entry point behind the `semroute` binary; args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semroute::cli
