#pragma once

#include <string>
#include <vector>

namespace mcf {

// CLI entry point (args exclude the program name). Exit codes:
//   0 success, 1 infeasibility certificate (FAIL), 2 usage or parse error,
//   3 solver/budget error.
int cli_run(const std::vector<std::string>& args);

}  // namespace mcf
