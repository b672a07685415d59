#include "mortensen/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mortensen/errors.hpp"

namespace mortensen {

TimeGrid::TimeGrid(double dt, int steps) : dt_(dt), steps_(steps) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive");
  if (steps < 0) throw ValidationError("step count must be non-negative");
}

TimeGrid TimeGrid::uniform(double t_final, double dt) {
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) {
    throw ValidationError("t_final must be non-negative");
  }
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  const double ratio = t_final / dt;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw ValidationError("dt does not divide t_final");
  }
  return {dt, static_cast<int>(steps)};
}

double TimeGrid::trapezoid_weight(int k) const {
  if (steps_ == 0) return 0.0;
  return (k == 0 || k == steps_) ? 0.5 * dt_ : dt_;
}

TimeGrid TimeGrid::prefix(int n) const {
  if (n < 0 || n > steps_) throw ValidationError("prefix index out of range");
  return {dt_, n};
}

Trajectory Trajectory::prefix(int n) const {
  Trajectory out{grid.prefix(n), {}};
  out.states.assign(states.begin(), states.begin() + n + 1);
  return out;
}

namespace {

template <class S>
S signal_prefix(const S& s, int n) {
  S out;
  out.grid = s.grid.prefix(n);
  out.values.assign(s.values.begin(), s.values.begin() + n + 1);
  return out;
}

void check_signal(const GriddedSignal& s, const TimeGrid& time, int dim, const char* name) {
  if (!(s.grid == time)) throw ValidationError(std::string(name) + " lives on a different time grid");
  if (static_cast<int>(s.values.size()) != time.size()) {
    throw ValidationError(std::string(name) + " has the wrong number of samples");
  }
  for (const auto& v : s.values) {
    if (v.size() != dim) {
      throw ValidationError(std::string(name) + " has dimension " + std::to_string(v.size()) +
                            ", expected " + std::to_string(dim));
    }
    if (!v.allFinite()) throw ValidationError(std::string(name) + " has non-finite samples");
  }
}

}  // namespace

ControlSignal ControlSignal::zero(const TimeGrid& grid, int modes) {
  ControlSignal s;
  s.grid = grid;
  s.values.assign(static_cast<std::size_t>(grid.size()), Vec::Zero(modes));
  return s;
}

ControlSignal ControlSignal::prefix(int n) const { return signal_prefix(*this, n); }

OutputSignal OutputSignal::zero(const TimeGrid& grid, int m) {
  OutputSignal s;
  s.grid = grid;
  s.values.assign(static_cast<std::size_t>(grid.size()), Vec::Zero(m));
  return s;
}

OutputSignal OutputSignal::prefix(int n) const { return signal_prefix(*this, n); }

double signal_inner(const GriddedSignal& x, const GriddedSignal& y) {
  if (!(x.grid == y.grid) || x.values.size() != y.values.size()) {
    throw ValidationError("signals live on different time grids");
  }
  double sum = 0.0;
  for (int k = 0; k < x.grid.size(); ++k) {
    sum += x.grid.trapezoid_weight(k) * x.values[k].dot(y.values[k]);
  }
  return sum;
}

double signal_norm(const GriddedSignal& x) { return std::sqrt(signal_inner(x, x)); }

double sup_energy_distance(const SpectralGrid& grid, const Trajectory& x, const Trajectory& y) {
  if (x.states.size() != y.states.size()) throw ValidationError("trajectory lengths differ");
  double d = 0.0;
  for (std::size_t k = 0; k < x.states.size(); ++k) {
    d = std::max(d, energy_norm(grid, x.states[k] - y.states[k]));
  }
  return d;
}

Propagator::Propagator(const SpectralGrid& grid, double tau) {
  const Vec& w = grid.frequencies();
  cos_ = (w * tau).array().cos();
  const Vec s = (w * tau).array().sin();
  sin_over_w_ = s.cwiseQuotient(w);
  w_sin_ = s.cwiseProduct(w);
}

void Propagator::apply(Vec& a, Vec& b) const {
  const Vec a0 = a;
  a = cos_.cwiseProduct(a0) + sin_over_w_.cwiseProduct(b);
  b = cos_.cwiseProduct(b) - w_sin_.cwiseProduct(a0);
}

void Propagator::apply_transpose(Vec& a, Vec& b) const {
  const Vec a0 = a;
  a = cos_.cwiseProduct(a0) - w_sin_.cwiseProduct(b);
  b = cos_.cwiseProduct(b) + sin_over_w_.cwiseProduct(a0);
}

Trajectory solve_forward(const SpectralGrid& grid, const EnergyState& w0, const ControlSignal& v,
                         const TimeGrid& time, bool cubic_on) {
  const int n = grid.mode_count();
  if (w0.mode_count() != n || w0.velocity.size() != n) {
    throw ValidationError("initial state does not match the grid");
  }
  if (!w0.is_finite()) throw ValidationError("initial state is not finite");
  check_signal(v, time, n, "control");

  const double h = 0.5 * time.dt();
  const Propagator rot(grid, time.dt());
  auto force = [&](const Vec& a, int k) -> Vec {
    Vec f = v.values[k];
    if (cubic_on) f -= cubic(grid, a);
    return f;
  };

  Trajectory out{time, {}};
  out.states.reserve(static_cast<std::size_t>(time.size()));
  out.states.push_back(w0);
  Vec a = w0.displacement;
  Vec b = w0.velocity;
  for (int k = 0; k < time.steps(); ++k) {
    b += h * force(a, k);
    rot.apply(a, b);
    b += h * force(a, k + 1);
    if (!a.allFinite() || !b.allFinite()) {
      throw DivergenceError("state became non-finite", k + 1);
    }
    out.states.emplace_back(a, b);
  }
  return out;
}

Trajectory solve_backward(const SpectralGrid& grid, const EnergyState& final_state,
                          const ControlSignal& v, const TimeGrid& time, bool cubic_on) {
  check_signal(v, time, grid.mode_count(), "control");
  ControlSignal reversed = v;
  std::reverse(reversed.values.begin(), reversed.values.end());
  const EnergyState start{final_state.displacement, -final_state.velocity};
  Trajectory fwd = solve_forward(grid, start, reversed, time, cubic_on);
  std::reverse(fwd.states.begin(), fwd.states.end());
  for (auto& s : fwd.states) s.velocity = -s.velocity;
  return fwd;
}

Trajectory nominal_trajectory(const SpectralGrid& grid, const EnergyState& w0,
                              const TimeGrid& time, bool cubic_on) {
  return solve_forward(grid, w0, ControlSignal::zero(time, grid.mode_count()), time, cubic_on);
}

}  // namespace mortensen
