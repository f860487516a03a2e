#include <iostream>

#include "dff/pipeline.hpp"

int main(int argc, char** argv) {
  return dff::pipeline::run_cli(argc, argv, std::cout, std::cerr);
}
