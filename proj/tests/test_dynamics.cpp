#include <doctest.h>

#include <cmath>
#include <random>

#include "mortensen/dynamics.hpp"
#include "mortensen/errors.hpp"

using namespace mortensen;

namespace {

ControlSignal smooth_control(const TimeGrid& time, int n, double amp, double phase) {
  ControlSignal v = ControlSignal::zero(time, n);
  for (int k = 0; k < time.size(); ++k) {
    const double t = time.time(k);
    v.values[k][0] = amp * std::cos(3 * t + phase);
    if (n > 1) v.values[k][1] = 0.5 * amp * std::sin(5 * t - phase);
  }
  return v;
}

EnergyState initial(int n) {
  EnergyState w = EnergyState::zero(n);
  w.displacement[0] = 1.0;
  if (n > 1) w.velocity[1] = 0.5;
  return w;
}

}  // namespace

TEST_CASE("time grid") {
  const TimeGrid g = TimeGrid::uniform(1.0, 0.01);
  CHECK(g.steps() == 100);
  CHECK(g.trapezoid_weight(0) == doctest::Approx(0.005));
  CHECK(g.trapezoid_weight(50) == doctest::Approx(0.01));
  CHECK(g.prefix(30).t_final() == doctest::Approx(0.3));
  CHECK_THROWS_AS(TimeGrid::uniform(1.0, 0.3), ValidationError);
}

TEST_CASE("unforced linear solve is the group") {
  const SpectralGrid grid(8);
  const TimeGrid time = TimeGrid::uniform(1.0, 0.01);
  const EnergyState w0 = initial(8);
  const Trajectory w = solve_forward(grid, w0, ControlSignal::zero(time, 8), time, false);
  for (int k = 0; k <= time.steps(); k += 10) {
    CHECK(energy_norm(grid, w.at(k) - group_action(grid, w0, time.time(k))) < 1e-13);
  }
}

TEST_CASE("superposition in the linear case") {
  const SpectralGrid grid(6);
  const TimeGrid time = TimeGrid::uniform(0.5, 0.01);
  const ControlSignal v1 = smooth_control(time, 6, 1.0, 0.2), v2 = smooth_control(time, 6, -0.4, 1.1);
  ControlSignal sum = v1;
  for (int k = 0; k < time.size(); ++k) sum.values[k] += v2.values[k];
  const Trajectory a = solve_forward(grid, initial(6), v1, time, false);
  const Trajectory b = solve_forward(grid, EnergyState::zero(6), v2, time, false);
  const Trajectory c = solve_forward(grid, initial(6), sum, time, false);
  for (int k = 0; k < time.size(); ++k) CHECK(energy_norm(grid, a.at(k) + b.at(k) - c.at(k)) < 1e-13);
}

TEST_CASE("backward solve inverts the forward solve") {
  const SpectralGrid grid(8);
  const TimeGrid time = TimeGrid::uniform(0.5, 0.005);
  const ControlSignal v = smooth_control(time, 8, 0.3, 0.0);
  const Trajectory fwd = solve_forward(grid, initial(8), v, time, true);
  const Trajectory bwd = solve_backward(grid, fwd.states.back(), v, time, true);
  CHECK(sup_energy_distance(grid, fwd, bwd) < 1e-12);
}

TEST_CASE("Strang scheme converges at second order") {
  const SpectralGrid grid(8);
  auto end_state = [&](double dt) {
    const TimeGrid time = TimeGrid::uniform(0.5, dt);
    return solve_forward(grid, initial(8), smooth_control(time, 8, 0.5, 0.3), time, true).states.back();
  };
  const EnergyState ref = end_state(0.5 / 1600);
  const double e1 = energy_norm(grid, end_state(0.5 / 25) - ref);
  const double e2 = energy_norm(grid, end_state(0.5 / 50) - ref);
  const double e3 = energy_norm(grid, end_state(0.5 / 100) - ref);
  CHECK(std::log2(e1 / e2) > 1.9);
  CHECK(std::log2(e2 / e3) > 1.9);
}

TEST_CASE("linearized solve is the tangent of the backward solve") {
  const SpectralGrid grid(6);
  const TimeGrid time = TimeGrid::uniform(0.4, 0.01);
  const ControlSignal v = smooth_control(time, 6, 0.3, 0.0);
  const EnergyState xi = initial(6);
  const Trajectory base = solve_backward(grid, xi, v, time, true);
  EnergyState eta = EnergyState::zero(6);
  eta.displacement[2] = 0.3;
  eta.velocity[0] = -0.2;
  const ControlSignal u = smooth_control(time, 6, 1.0, 0.7);
  LinearizedInputs in;
  in.final_dir = eta;
  in.control_dir = u;
  const Trajectory z = solve_linearized(grid, base, in, true);
  const double h = 1e-6;
  ControlSignal vp = v, vm = v;
  for (int k = 0; k < time.size(); ++k) {
    vp.values[k] += h * u.values[k];
    vm.values[k] -= h * u.values[k];
  }
  const Trajectory p = solve_backward(grid, xi + h * eta, vp, time, true);
  const Trajectory m = solve_backward(grid, xi - h * eta, vm, time, true);
  for (int k = 0; k < time.size(); k += 8) {
    const EnergyState fd = (1.0 / (2 * h)) * (p.at(k) - m.at(k));
    CHECK(energy_norm(grid, fd - z.at(k)) < 1e-7 * (1 + energy_norm(grid, fd)));
  }
}

TEST_CASE("signal norms use the trapezoid rule") {
  const TimeGrid time = TimeGrid::uniform(1.0, 0.25);
  OutputSignal y = OutputSignal::zero(time, 1);
  for (auto& v : y.values) v[0] = 1.0;
  CHECK(signal_norm(y) == doctest::Approx(1.0));
  CHECK(signal_inner(y, y) == doctest::Approx(1.0));
}
