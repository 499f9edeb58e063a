#include <iostream>
#include <string>
#include <vector>

#include "ysm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ysm::cli::main_entry(std::move(args), std::cout, std::cerr);
}
