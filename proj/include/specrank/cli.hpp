#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace specrank::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitBackend = 2;

/// Entry point shared by the `specrank` binary and the tests. `args` excludes
/// the program name. Diagnostics go to `err`, progress lines to `log`.
int run(const std::vector<std::string>& args, std::ostream& log, std::ostream& err);

}  // namespace specrank::cli
