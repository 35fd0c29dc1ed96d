#include <iostream>

#include "smaxent/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return smaxent::run_cli(args, std::cout, std::cerr);
}
