#include <iostream>

#include "qgsim_cli/cli.hpp"

int main(int argc, char** argv) {
  return qgsim::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
