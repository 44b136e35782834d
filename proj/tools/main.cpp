#include <iostream>
#include <string>
#include <vector>

#include "pipeline.hpp"

int main(int argc, char** argv) {
  return sppc::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
