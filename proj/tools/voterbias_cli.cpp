#include <iostream>
#include <string>
#include <vector>

#include "voterbias/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return voterbias::cli::run(args, std::cout, std::cerr);
}
