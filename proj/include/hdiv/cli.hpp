#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hdiv::cli {

inline constexpr const char* kToolVersion = "hdiv 1.0.0";

/// Exit codes: 0 success, 2 invalid input or usage, 3 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload for tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hdiv::cli
