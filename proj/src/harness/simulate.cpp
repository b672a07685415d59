#include "mortensen/harness/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mortensen/errors.hpp"

namespace mortensen::harness {

namespace {

EnergyState initial_state(const ScenarioConfig& cfg) {
  EnergyState w0 = EnergyState::zero(cfg.mode_count);
  for (std::size_t k = 0; k < cfg.initial_displacement.size(); ++k) {
    w0.displacement[static_cast<Eigen::Index>(k)] = cfg.initial_displacement[k];
  }
  for (std::size_t k = 0; k < cfg.initial_velocity.size(); ++k) {
    w0.velocity[static_cast<Eigen::Index>(k)] = cfg.initial_velocity[k];
  }
  return w0;
}

ScenarioConfig checked(const ScenarioConfig& cfg) {
  validate(cfg);
  return cfg;
}

constexpr int kDisturbedModes = 4;

// Unit-variance stationary OU samples smoothed twice by the same filter.
std::vector<double> smooth_noise(std::mt19937_64& rng, int samples, double dt, double tau) {
  std::normal_distribution<double> normal;
  const double rho = std::exp(-dt / tau);
  const double kick = std::sqrt(1.0 - rho * rho);
  std::vector<double> out(static_cast<std::size_t>(samples));
  double ou = normal(rng);
  double s1 = ou;
  double s2 = ou;
  for (int k = 0; k < samples; ++k) {
    if (k > 0) ou = rho * ou + kick * normal(rng);
    s1 = rho * s1 + (1.0 - rho) * ou;
    s2 = rho * s2 + (1.0 - rho) * s1;
    out[static_cast<std::size_t>(k)] = s2;
  }
  return out;
}

template <class S>
void scale_to(S& signal, double amplitude) {
  const double norm = signal_norm(signal);
  const double factor = norm > 0.0 ? amplitude / norm : 0.0;
  for (auto& v : signal.values) v *= factor;
}

}  // namespace

MeasurementOp build_measurement(const SpectralGrid& grid, const MeasurementSpec& desc) {
  if (desc.kind == "low_modes") return MeasurementOp::low_modes(grid, desc.m);
  if (desc.kind == "velocity_probe") return MeasurementOp::velocity_probe(grid, desc.points);
  Mat c(static_cast<Eigen::Index>(desc.matrix.size()), 2 * grid.mode_count());
  for (std::size_t i = 0; i < desc.matrix.size(); ++i) {
    if (static_cast<int>(desc.matrix[i].size()) != 2 * grid.mode_count()) {
      throw ValidationError("measurement.matrix: row length must be 2 * mode_count");
    }
    for (std::size_t j = 0; j < desc.matrix[i].size(); ++j) {
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = desc.matrix[i][j];
    }
  }
  return {grid, std::move(c)};
}

Scenario::Scenario(const ScenarioConfig& cfg)
    : cfg_(checked(cfg)),
      model_([&] {
        const SpectralGrid grid(cfg.mode_count, cfg.domain_length, cfg.dealias_factor);
        return Model::create(grid, build_measurement(grid, cfg.measurement), cfg.alpha,
                             cfg.cubic_on, initial_state(cfg),
                             TimeGrid::uniform(cfg.t_final, cfg.dt));
      }()) {}

OcpOptions Scenario::ocp_options() const {
  OcpOptions o;
  o.tol = cfg_.tolerances.ocp;
  o.max_iter = cfg_.tolerances.ocp_max_iter;
  o.trust_radius = cfg_.trust_radius;
  o.cg_tol = cfg_.tolerances.cg;
  o.cg_max_iter = cfg_.tolerances.cg_max_iter;
  return o;
}

ObserverConfig Scenario::observer_config(const RiccatiSolution* riccati) const {
  ObserverConfig c;
  c.model = &model_;
  c.ocp = ocp_options();
  c.margin_floor = cfg_.tolerances.margin_floor;
  c.riccati = riccati;
  c.fixed_point_tol = cfg_.tolerances.fixed_point;
  c.fixed_point_max_iter = cfg_.tolerances.fixed_point_max_iter;
  c.argmin_tol = cfg_.tolerances.argmin;
  c.argmin_max_iter = cfg_.tolerances.argmin_max_iter;
  c.trust_radius = cfg_.trust_radius;
  return c;
}

Disturbances synthesize_disturbances(const Scenario& s) {
  const ScenarioConfig& cfg = s.config();
  const DisturbanceSpec& d = cfg.disturbance;
  const TimeGrid& time = s.time();
  const int n = cfg.mode_count;
  const int m = s.model().measurement.output_dim();
  const int modes = std::min(n, kDisturbedModes);

  Disturbances out{ControlSignal::zero(time, n), EnergyState::zero(n), OutputSignal::zero(time, m)};

  if (d.v_kind == "smooth_random" && d.v_amplitude > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    for (int j = 0; j < modes; ++j) {
      const auto env = smooth_noise(rng, time.size(), time.dt(), d.v_correlation_time);
      for (int k = 0; k < time.size(); ++k) out.v.values[k][j] = env[k] / (j + 1);
    }
    scale_to(out.v, d.v_amplitude);
  }
  if (d.eta_kind == "random" && d.eta_amplitude > 0.0) {
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal;
    for (int j = 0; j < modes; ++j) {
      out.eta.displacement[j] = normal(rng) / s.grid().frequencies()[j];
      out.eta.velocity[j] = normal(rng);
    }
    const double e = energy_norm(s.grid(), out.eta);
    if (e > 0.0) out.eta *= d.eta_amplitude / e;
  }
  if (d.mu_kind == "random" && d.mu_amplitude > 0.0) {
    std::mt19937_64 rng(cfg.seed ^ 0xbf58476d1ce4e5b9ULL);
    for (int j = 0; j < m; ++j) {
      const auto env = smooth_noise(rng, time.size(), time.dt(), d.v_correlation_time);
      for (int k = 0; k < time.size(); ++k) out.mu.values[k][j] = env[k];
    }
    scale_to(out.mu, d.mu_amplitude);
  }
  return out;
}

Simulation simulate(const Scenario& s) { return simulate(s, synthesize_disturbances(s)); }

Simulation simulate(const Scenario& s, const Disturbances& d) {
  const Model& m = s.model();
  Simulation out;
  out.disturbances = d;
  out.truth = solve_forward(m.grid, m.nominal.at(0) + d.eta, d.v, m.time(), m.cubic_on);
  out.y_abs = OutputSignal::zero(m.time(), m.measurement.output_dim());
  for (int k = 0; k < m.time().size(); ++k) {
    out.y_abs.values[k] = m.measurement.apply(out.truth.at(k)) + d.mu.values[k];
  }
  out.y_rel = m.shift_output(out.y_abs);
  return out;
}

OutputSignal scaled(const OutputSignal& y, double factor) {
  OutputSignal out = y;
  for (auto& v : out.values) v *= factor;
  return out;
}

std::vector<int> sample_indices(const TimeGrid& time, int count) {
  std::vector<int> out;
  for (int j = 0; j <= count; ++j) {
    out.push_back(static_cast<int>(std::lround(static_cast<double>(j) * time.steps() / count)));
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace mortensen::harness
