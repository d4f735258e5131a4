#include <iostream>

#include "fieldsim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fieldsim::cli::main(std::move(args), {std::cout, std::cerr});
}
