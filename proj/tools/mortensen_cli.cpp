#include <iostream>

#include "mortensen/harness/commands.hpp"

int main(int argc, char** argv) {
  return mortensen::harness::run_cli({argv, argv + argc}, std::cout, std::cerr);
}
