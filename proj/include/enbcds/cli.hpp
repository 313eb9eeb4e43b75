#ifndef ENBCDS_CLI_HPP
#define ENBCDS_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace enbcds::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// Runs one invocation. `args` excludes the program name. Returns the exit
// code; normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace enbcds::cli

#endif  // ENBCDS_CLI_HPP
