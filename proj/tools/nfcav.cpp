#include <iostream>
#include <string>
#include <vector>

#include "nfcav/app/commands.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return nfcav::app::run_cli(args, std::cout, std::cerr);
}
