#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace levylse {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Entry point of the levy_lse tool. `args` excludes the program name.
/// Returns the process exit code; never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace levylse
