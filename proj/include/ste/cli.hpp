#ifndef STE_CLI_HPP
#define STE_CLI_HPP

#include <string>
#include <vector>

namespace ste::cli {

// Runs one subcommand; args exclude the program name. Exit codes: 0 success,
// 1 usage, 2 validation (or malformed input file), 3 runtime failure.
int dispatch(const std::vector<std::string>& args);

}  // namespace ste::cli

#endif  // STE_CLI_HPP
