#include <iostream>

#include "chunkbench/cli.h"

int main(int argc, char** argv) {
  return chunkbench::run_cli(argc, argv, std::cout, std::cerr);
}
