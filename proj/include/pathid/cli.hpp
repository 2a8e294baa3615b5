#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pathid::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kParse = 2,
  kNumeric = 3,
};

/// Runs one subcommand. args excludes the program name. Results go to
/// `out` (or to --out, written via a temporary file and an atomic rename);
/// diagnostics go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Writes content to path through a sibling temporary file and rename, so
/// a failed run never leaves a partial file behind.
void write_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace pathid::cli
