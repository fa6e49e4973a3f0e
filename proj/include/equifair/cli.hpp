#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace equifair::cli {

inline constexpr const char* kVersion = "0.1.0";

// Runs one command line. Failures print "error: <category>: <message>" on
// `err` and return the category's exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace equifair::cli
