#include <iostream>

#include "tracelens/cli.h"

int main(int argc, char** argv) {
  return tracelens::cli::Run(argc, argv, std::cout, std::cerr);
}
