#include <iostream>
#include <string>
#include <vector>

#include "flaresynth/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return flaresynth::cli::run(args, std::cout, std::cerr);
}
