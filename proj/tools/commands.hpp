#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace p300::cli {

// Runs the p300 command line. Errors are reported on `err` as one
// `error: code=<name> message=<text>` line; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string error_line(std::string_view code, std::string_view message);

}  // namespace p300::cli
