#include <iostream>

#include "semroute_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return semroute::cli::run(args, std::cout, std::cerr);
}
