#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tailfit/gpu_model.hpp"

namespace tailfit::cli {

inline constexpr const char* kToolVersion = "tailfit 0.1.0";

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 2,
  kIoError = 3,
  kInfeasible = 4,
};

/// Run one invocation; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "first:last[:step]" in filters or "p%:q%[:s%]" in percent of `filters`.
/// A single value selects one width.
std::vector<Width> parse_width_range(const std::string& text, Width filters);

/// Write through a sibling temp file and rename; Error(Io) on failure.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace tailfit::cli
