#include <iostream>

#include "mtse/cli.hpp"

int main(int argc, char** argv) {
  return mtse::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
