#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lsdgnn::cli {

// Runs one command line (program name excluded). Returns the process exit
// code: 0 on success, 1 on validation or usage errors, 2 on runtime errors.
int cli_main(std::vector<std::string> args, std::ostream& out,
             std::ostream& err);

}  // namespace lsdgnn::cli
