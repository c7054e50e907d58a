#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mtse {

inline constexpr std::uint64_t kDefaultSeed = 20240601;

enum ExitCode : int { kExitOk = 0, kExitInputError = 1, kExitNumericalError = 2 };

/// Entry point of the `mtse` executable. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtse
