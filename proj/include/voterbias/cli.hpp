#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace voterbias::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitInternal = 70;

/// Runs one command line (args[0] is the program name). Never throws;
/// failures map to kExitData or kExitUsage with a message on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace voterbias::cli
