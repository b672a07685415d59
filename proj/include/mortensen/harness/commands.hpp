#pragma once

// Command-line front end. args[0] is the program name.

#include <ostream>
#include <string>
#include <vector>

namespace mortensen::harness {

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mortensen::harness
