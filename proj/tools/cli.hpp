#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace envsniff::cli {

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Exit codes: 0 success, 1 hard error, 2 partial result.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace envsniff::cli
