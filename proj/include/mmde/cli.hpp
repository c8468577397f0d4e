#ifndef MMDE_CLI_HPP
#define MMDE_CLI_HPP

#include <string>
#include <vector>

namespace mmde {

// Dispatches a full command line (without argv[0]).
// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 numerical failure.
int run_command(const std::vector<std::string>& args);

}  // namespace mmde

#endif  // MMDE_CLI_HPP
