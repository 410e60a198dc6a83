#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace carnot::cli {

// Exit codes of run().
inline constexpr int kOk = 0;
inline constexpr int kInvalid = 1;   // usage error or rejected input
inline constexpr int kReported = 2;  // a failed check or divergence, written out as data

// args excludes the program name. Results go to out (or --output), diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace carnot::cli
