#include <iostream>

#include "lattheta/cli.hpp"

int main(int argc, char** argv) {
  return lattheta::run_cli(argc, argv, std::cout, std::cerr);
}
