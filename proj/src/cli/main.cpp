#include <iostream>

#include "d2wfp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return d2wfp::cli::run(args, std::cout, std::cerr);
}
