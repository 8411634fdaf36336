#include <iostream>

#include "spard/cli.hpp"

int main(int argc, char** argv) {
  return spard::run_cli(argc, argv, std::cout, std::cerr);
}
