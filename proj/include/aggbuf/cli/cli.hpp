#pragma once

#include <iosfwd>

namespace aggbuf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Full command-line entry point: `aggbuf <subcommand> [flags]`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aggbuf::cli
