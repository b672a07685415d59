#pragma once

// Time integration of the cubic wave equation in first-order form
//   w' = A w + [0; -w_1^3 + v]
// on a uniform grid. One integrator serves every solve: a Strang splitting
// that propagates the linear part exactly with the group e^{At} and applies
// the forcing as half-step velocity kicks at the grid nodes,
//   b += dt/2 F_k;  w = e^{A dt} w;  b += dt/2 F_{k+1},  F = -cubic(a) + v.
// The kick is exact for the forcing because it does not change a. For v = 0
// the step is the symplectic Verlet map of the discrete Hamiltonian.

#include <optional>
#include <vector>

#include "mortensen/discretization.hpp"

namespace mortensen {

class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double dt, int steps);
  // Uniform grid on [0, t_final]; dt must divide t_final to 1e-9.
  static TimeGrid uniform(double t_final, double dt);

  double dt() const { return dt_; }
  int steps() const { return steps_; }
  int size() const { return steps_ + 1; }
  double t_final() const { return dt_ * steps_; }
  double time(int k) const { return dt_ * k; }
  // Trapezoid weight of node k on [0, t_final].
  double trapezoid_weight(int k) const;
  // The grid restricted to [0, time(n)].
  TimeGrid prefix(int n) const;

  bool operator==(const TimeGrid& o) const { return dt_ == o.dt_ && steps_ == o.steps_; }

 private:
  double dt_ = 0.0;
  int steps_ = 0;
};

// Nodal samples of a mild solution.
struct Trajectory {
  TimeGrid grid;
  std::vector<EnergyState> states;

  const EnergyState& at(int k) const { return states.at(static_cast<std::size_t>(k)); }
  Trajectory prefix(int n) const;
};

// Nodal samples of a time-dependent vector (an L^2 disturbance or an output).
struct GriddedSignal {
  TimeGrid grid;
  std::vector<Vec> values;

  int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
};

// v in L_t = L^2(0,t; L^2), stored by sine coefficients.
struct ControlSignal : GriddedSignal {
  static ControlSignal zero(const TimeGrid& grid, int modes);
  ControlSignal prefix(int n) const;
};

// y in Y_t = L^2(0,t; R^m).
struct OutputSignal : GriddedSignal {
  static OutputSignal zero(const TimeGrid& grid, int m);
  OutputSignal prefix(int n) const;
};

// Trapezoid-rule L^2(0,t) inner product and norm.
double signal_inner(const GriddedSignal& x, const GriddedSignal& y);
double signal_norm(const GriddedSignal& x);

// sup_k ||x_k - y_k||_E.
double sup_energy_distance(const SpectralGrid& grid, const Trajectory& x, const Trajectory& y);

// Per-mode rotation e^{A tau} for fixed tau, precomputed.
class Propagator {
 public:
  Propagator(const SpectralGrid& grid, double tau);
  void apply(Vec& a, Vec& b) const;
  // Transpose in stacked coefficients (not the energy adjoint).
  void apply_transpose(Vec& a, Vec& b) const;

 private:
  Vec cos_, sin_over_w_, w_sin_;
};

Trajectory solve_forward(const SpectralGrid& grid, const EnergyState& w0, const ControlSignal& v,
                         const TimeGrid& time, bool cubic_on);

// final_state is the absolute terminal value. Solved by time reversal:
// negate velocity, run solve_forward on the reversed control, undo.
Trajectory solve_backward(const SpectralGrid& grid, const EnergyState& final_state,
                          const ControlSignal& v, const TimeGrid& time, bool cubic_on);

Trajectory nominal_trajectory(const SpectralGrid& grid, const EnergyState& w0,
                              const TimeGrid& time, bool cubic_on);

struct LinearizedInputs {
  std::optional<EnergyState> final_dir;
  std::optional<ControlSignal> control_dir;
  std::optional<ControlSignal> source;
};

// Solves the linear backward problem
//   z(s) = e^{-A(t-s)} eta - int_s^t e^{-A(tau-s)} [0; -3 w_1^2 z_1 + u + g] dtau
// about the base trajectory (the exact tangent of the discrete backward step).
Trajectory solve_linearized(const SpectralGrid& grid, const Trajectory& base,
                            const LinearizedInputs& inputs, bool cubic_on);

}  // namespace mortensen
