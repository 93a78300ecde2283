// Command-line front end.
//
// Exit codes: 0 success, 1 property failure, 2 usage error, 3 I/O error.
#pragma once

#include <iosfwd>

namespace cat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPropertyFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace cat::cli
