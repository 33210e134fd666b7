#pragma once

#include <string>
#include <vector>

namespace sclr::cli {

// Exit codes: 0 success, 1 usage, 2 config error, 3 io error, 4 runtime error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitRuntime = 4;

// Subcommands: train, refine, attack, eval, suite, gen-data.
// `args` excludes the program name.
int run_command(const std::vector<std::string>& args);

}  // namespace sclr::cli
