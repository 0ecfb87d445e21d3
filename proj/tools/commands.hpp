#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace feig::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNonConvergence = 2;

/// Default seed: FORWARD_EIG_SEED if set, else 1. Throws InvalidArgument on a
/// malformed value.
std::uint64_t default_seed();

/// The whole `feig` command line. Writes results to `out` (or the files
/// named by --out/--csv) and diagnostics to `err`; returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace feig::cli
