#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lcgf::cli {

/// Parses argv, runs one subcommand and returns the process exit code:
/// 0 success, 1 input error, 2 numerical error, 3 insufficient data.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Names of every subcommand, in registration order.
std::vector<std::string> subcommand_names();

/// `--help` text of one subcommand, or of the top-level app when `name` is empty.
std::string help_text(const std::string& name);

/// Every option of a subcommand with its help group; an empty group means the
/// option is hidden from `--help`.
struct OptionInfo {
  std::string names;
  std::string group;
  std::string description;
};
std::vector<OptionInfo> option_info(const std::string& name);

}  // namespace lcgf::cli
