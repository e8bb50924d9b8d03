#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace docgraph::cli {

// Exit codes: 0 success, 1 usage or validation error, 2 runtime error.
int run(int argc, const char* const* argv);
// `args` excludes the program name. Data goes to `out`, logs to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace docgraph::cli
