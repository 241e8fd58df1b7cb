#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kktstab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInconsistent = 2;
inline constexpr int kExitUsage = 64;

// `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kktstab::cli
