#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bigreg::cli {

// Exit codes of every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitFailure = 4;

/// Runs one command line (without the program name), e.g.
/// {"register", "--moving", "m", ...}. Diagnostics go to `err`, help and
/// short summaries to `out`. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a of a file's bytes, as 16 lowercase hex digits.
std::string fnv1a64_file(const std::string& path);

}  // namespace bigreg::cli
