#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace regiontag {

/// Entry point shared by the executable and the tests. args[0] is the program name.
/// Returns 0 on success, 2 for usage errors, 3 for data errors, 4 for internal errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace regiontag
