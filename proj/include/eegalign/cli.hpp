#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eegalign::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

// Entry point for `eegalign <subcommand> [flags]`; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eegalign::cli
