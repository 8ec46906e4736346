#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "codeslice/pipeline.hpp"

namespace codeslice::cli {

// Parses and runs one command line. Returns the process exit code
// (0 success, 1 usage or configuration error, 2 runtime error).
int run(const std::vector<std::string> &args, const Runtime &runtime, std::ostream &out, std::ostream &err);

} // namespace codeslice::cli
