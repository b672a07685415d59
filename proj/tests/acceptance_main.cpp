// Runs every acceptance criterion on the default scenario and prints one
// line per criterion. Exit status is nonzero if any criterion fails.

#include <iostream>

#include "mortensen/harness/acceptance.hpp"

int main() {
  mortensen::harness::AcceptanceOptions options;
  bool all = true;
  mortensen::harness::run_acceptance(options, [&](const mortensen::harness::CriterionResult& r) {
    std::cout << mortensen::harness::format_result(r) << std::endl;
    all = all && r.passed;
  });
  std::cout << (all ? "all criteria passed" : "some criteria failed") << std::endl;
  return all ? 0 : 1;
}
