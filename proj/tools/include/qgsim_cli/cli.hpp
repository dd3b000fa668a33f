#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qgsim::cli {

// Parses argv and runs one command. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qgsim::cli
