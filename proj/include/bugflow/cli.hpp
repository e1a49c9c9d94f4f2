#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bugflow/types.hpp"

namespace bugflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

/// "a,b,c", "log:lo:hi:n" or "lin:lo:hi:n" (hours).
std::vector<double> parse_grid(const std::string& text);

/// `args` excludes the program name. `in` backs --in when it is absent or "-".
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace bugflow::cli
