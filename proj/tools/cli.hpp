#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crosscbr::cli {

// Exit codes of the crosscbr tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDataset = 3;
inline constexpr int kExitNumerical = 4;
inline constexpr int kExitDimension = 5;

/// Runs one subcommand; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crosscbr::cli
