#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace passlab {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

/// Runs one subcommand. argv[0] is the program name. Results go to `out`,
/// progress logs and errors to `err`.
int cli_dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, const char* const* argv);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

}  // namespace passlab
