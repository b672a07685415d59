#include "mortensen/errors.hpp"

namespace mortensen {

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 2;
  if (dynamic_cast<const CoercivityLossError*>(&e)) return 4;
  if (dynamic_cast<const NonconvergenceError*>(&e) ||
      dynamic_cast<const DivergenceError*>(&e) ||
      dynamic_cast<const TrustRegionError*>(&e)) {
    return 3;
  }
  return 1;
}

}  // namespace mortensen
