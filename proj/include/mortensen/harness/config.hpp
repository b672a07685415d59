#pragma once

// Scenario configuration. JSON in, strict: unknown keys and invariant
// violations raise ValidationError naming the field path.

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "mortensen/observer.hpp"

namespace mortensen::harness {

struct MeasurementSpec {
  std::string kind = "low_modes";  // low_modes | velocity_probe | custom
  int m = 4;
  std::vector<double> points;
  std::vector<std::vector<double>> matrix;
};

struct DisturbanceSpec {
  std::string v_kind = "zero";  // zero | smooth_random
  double v_amplitude = 0.0;
  double v_correlation_time = 0.1;
  std::string eta_kind = "zero";  // zero | random
  double eta_amplitude = 0.0;
  std::string mu_kind = "zero";  // zero | random
  double mu_amplitude = 0.0;
};

struct Tolerances {
  double ocp = 1e-9;
  int ocp_max_iter = 30;
  double cg = 1e-12;
  int cg_max_iter = 500;
  double argmin = 1e-9;
  int argmin_max_iter = 20;
  double fixed_point = 1e-12;
  int fixed_point_max_iter = 200;
  double margin_floor = 1e-8;
};

struct ScenarioConfig {
  int mode_count = 32;
  double domain_length = std::numbers::pi;
  double dealias_factor = 2.0;
  double t_final = 1.0;
  double dt = 1e-3;
  double alpha = 1.0;
  bool cubic_on = true;
  // Leading sine coefficients of the nominal initial state; the rest are zero.
  std::vector<double> initial_displacement{1.0};
  std::vector<double> initial_velocity{0.0, 0.5};
  MeasurementSpec measurement;
  DisturbanceSpec disturbance;
  std::uint64_t seed = 0;
  double trust_radius = 1.0;
  Tolerances tolerances;
  GainMode gain;
  int riccati_substeps = 1;
  int argmin_samples = 10;  // evenly spaced sample times for estimate-argmin
};

// Throws ValidationError with a field path on the first violation.
void validate(const ScenarioConfig& cfg);

ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& cfg);

ScenarioConfig load_config(const std::string& path);

// Sets a dotted path to a value parsed as JSON, or as a string when the
// text is not valid JSON. Intermediate objects are created as needed.
void apply_override(nlohmann::json& j, const std::string& assignment);

}  // namespace mortensen::harness
