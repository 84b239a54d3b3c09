#include <iostream>
#include <string>
#include <vector>

#include "rareevent/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rareevent::cli::run_cli(args, std::cout, std::cerr);
}
