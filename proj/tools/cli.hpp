#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace urbanpulse::cli {

// Runs one invocation of the command-line tool. argv[0] is the program name.
// Success prints a JSON summary on `out`; failure prints {"error": ...} on
// `err` and returns non-zero.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace urbanpulse::cli
