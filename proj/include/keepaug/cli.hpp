#ifndef KEEPAUG_CLI_HPP
#define KEEPAUG_CLI_HPP

#include <string>
#include <vector>

namespace keepaug {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 0 success, 2 usage error, 1 runtime error. With --json,
// errors go to stderr as single-line JSON objects.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

} // namespace keepaug

#endif
