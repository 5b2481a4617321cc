#include <string>
#include <vector>

#include "mcf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mcf::cli_run(args);
}
