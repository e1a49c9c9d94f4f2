#include <iostream>
#include <string>
#include <vector>

#include "bugflow/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bugflow::cli::run(args, std::cin, std::cout, std::cerr);
}
