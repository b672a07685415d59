#pragma once

#include <memory>

#include "mortensen/harness/config.hpp"
#include "mortensen/observer.hpp"

namespace mortensen::harness {

// A configured model. Not movable: solver configs point into it.
class Scenario {
 public:
  explicit Scenario(const ScenarioConfig& cfg);
  Scenario(const Scenario&) = delete;
  Scenario& operator=(const Scenario&) = delete;

  const ScenarioConfig& config() const { return cfg_; }
  const Model& model() const { return model_; }
  const SpectralGrid& grid() const { return model_.grid; }
  const TimeGrid& time() const { return model_.time(); }

  OcpOptions ocp_options() const;
  // Observer settings; `riccati` may be null (computed on demand).
  ObserverConfig observer_config(const RiccatiSolution* riccati = nullptr) const;

 private:
  ScenarioConfig cfg_;
  Model model_;
};

MeasurementOp build_measurement(const SpectralGrid& grid, const MeasurementSpec& desc);

struct Disturbances {
  ControlSignal v;
  EnergyState eta;
  OutputSignal mu;
};

// v: twice-smoothed Ornstein-Uhlenbeck envelopes on the lowest sine modes,
// scaled to ||v||_{L_T} = amplitude. eta: random low modes with
// ||eta||_E = amplitude. mu: smoothed noise scaled to ||mu||_{Y_T} = amplitude.
// Each part draws from its own stream derived from the seed.
Disturbances synthesize_disturbances(const Scenario& s);

struct Simulation {
  Disturbances disturbances;
  Trajectory truth;
  OutputSignal y_abs;
  OutputSignal y_rel;
};

Simulation simulate(const Scenario& s);
Simulation simulate(const Scenario& s, const Disturbances& d);

// y_rel scaled by a factor, for data-size sweeps.
OutputSignal scaled(const OutputSignal& y, double factor);

// Evenly spaced grid indices 0 = i_0 < ... < i_{count} = steps.
std::vector<int> sample_indices(const TimeGrid& time, int count);

}  // namespace mortensen::harness
