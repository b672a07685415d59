#pragma once

// The twelve acceptance criteria, runnable from the CLI (verify) and from
// the acceptance test binary. Each yields one pass/fail line.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mortensen/harness/config.hpp"
#include "mortensen/harness/simulate.hpp"

namespace mortensen::harness {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string summary;
  double seconds = 0.0;
  double time_limit = 0.0;
  nlohmann::json data;
};

struct AcceptanceOptions {
  ScenarioConfig base;       // desk-scale scenario; disturbances are set per criterion
  std::vector<int> only;     // empty = all
  std::string scratch_dir;   // for file round trips; empty = system temp
};

std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options,
    const std::function<void(const CriterionResult&)>& on_result = {});

std::string format_result(const CriterionResult& r);

// Random (xi, y, v, h) cases inside the trust region and the central
// difference check of the reduced-cost gradient along h.
struct GradientTrial {
  int horizon_index = 0;
  double directional = 0.0;
  double finite_difference = 0.0;
  double relative_error = 0.0;
};
std::vector<GradientTrial> gradient_check(const Scenario& s, int trials, std::uint64_t seed,
                                          double eps = 1e-5);

}  // namespace mortensen::harness
