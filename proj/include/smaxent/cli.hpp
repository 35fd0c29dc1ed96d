// Command-line front end. Kept in the library so tests can drive it.

#ifndef SMAXENT_CLI_HPP
#define SMAXENT_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace smaxent {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitClassification = 3;

/// `args` excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace smaxent

#endif  // SMAXENT_CLI_HPP
