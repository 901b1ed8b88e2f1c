#include <iostream>
#include <string>
#include <vector>

#include "quadet_tools/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return quadet::tools::run_cli(args, std::cout, std::cerr);
}
