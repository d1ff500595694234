#include <iostream>
#include <string>
#include <vector>

#include "lacnet/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lacnet::run_cli(args, std::cout, std::cerr);
}
