#pragma once

// The replab command line as a library, so tests can drive it in-process.
//
// Exit codes:
//   0  success, or a campaign verdict of "consistent"
//   1  malformed input (bad flags, unreadable or invalid files)
//   2  campaign verdict "violated", or replay found differing outputs
//   3  campaign verdict "inconclusive"
//   4  a mathematical precondition failed (message names it)
//   5  numerical failure

#include <iosfwd>
#include <string>
#include <vector>

namespace replab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitMalformed = 1;
inline constexpr int kExitViolated = 2;
inline constexpr int kExitInconclusive = 3;
inline constexpr int kExitPrecondition = 4;
inline constexpr int kExitNumerical = 5;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::string& bytes);

}  // namespace replab::cli
