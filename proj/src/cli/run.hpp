#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace erobot::cli {

/// Exit codes: 0 success, 1 usage or invalid input, 2 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace erobot::cli
