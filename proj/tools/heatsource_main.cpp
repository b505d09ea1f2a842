#include <iostream>

#include "heatsource/cli.hpp"

int main(int argc, char** argv) {
  return heatsource::run_cli(argc, argv, std::cout, std::cerr);
}
