#include <iostream>
#include <vector>

#include "advmc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return advmc::run_cli(args, std::cout, std::cerr);
}
