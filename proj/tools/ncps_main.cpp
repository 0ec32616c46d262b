#include <iostream>
#include <string>
#include <vector>

#include "ncps/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ncps::run_cli(args, std::cout, std::cerr);
}
