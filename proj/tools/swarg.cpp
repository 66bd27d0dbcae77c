#include <iostream>
#include <string>
#include <vector>

#include "swar/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return swar::cli::run(args, std::cout, std::cerr);
}
