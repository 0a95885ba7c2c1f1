#include <iostream>
#include <string>
#include <vector>

#include "pvm/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return pvm::RunCli(args, std::cout, std::cerr);
}
