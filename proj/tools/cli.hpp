#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace paf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitEnvironment = 2;

/// Runs one command line (without the program name). Normal output goes to
/// `out`; diagnostics, manifests and chat annotations go to `err`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace paf::cli
