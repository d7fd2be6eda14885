#pragma once

#include <string>
#include <vector>

namespace pzflow::cli {

enum ExitCode { Success = 0, NumericalFailure = 1, ConfigurationError = 2 };

/// Parses `args` (without the program name) and runs one subcommand.
int run(const std::vector<std::string>& args);

/// Hex SHA-256 of a file's contents.
std::string file_checksum(const std::string& path);

}  // namespace pzflow::cli
