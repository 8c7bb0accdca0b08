#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace forge::cli {

// Runs one `forge` invocation. argv[0] is the program name. Returns the
// process exit status; failures write a single "<kind>: <message>" line to
// `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Convenience overload taking the arguments after the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace forge::cli
