#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cqasum::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kTraining = 3 };

/// Runs one command line (without the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Help text covering every subcommand and flag.
std::string full_help();

} // namespace cqasum::cli
