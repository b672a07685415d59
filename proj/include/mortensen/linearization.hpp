#pragma once

// Tangent and adjoint sweeps of the discrete backward state equation about a
// fixed base trajectory. Everything derivative-related (reduced gradients,
// Hessian-vector products, GLQR solves) is assembled from these two sweeps,
// so the finite-difference checks hold to the accuracy of the arithmetic.

#include <vector>

#include "mortensen/discretization.hpp"
#include "mortensen/dynamics.hpp"

namespace mortensen {

class TangentModel {
 public:
  TangentModel(const SpectralGrid& grid, const Trajectory& base, bool cubic_on);

  const SpectralGrid& grid() const { return *grid_; }
  const Trajectory& base() const { return *base_; }
  int horizon() const { return base_->grid.steps(); }
  bool cubic_on() const { return cubic_on_; }

  // Backward tangent recursion with terminal value final_dir and nodal
  // forcing s_k (control direction plus source), both optional (nullptr = 0).
  Trajectory tangent(const EnergyState* final_dir, const std::vector<Vec>* forcing) const;

  struct Adjoint {
    // d/ds_k of sum_k <loads_k, z_k>; raw, not divided by trapezoid weights.
    std::vector<Vec> forcing;
    // d/d(final_dir) of the same functional, as a stacked dual vector.
    Vec final_dual;
  };
  // loads[k] is the stacked Euclidean dual of z_k.
  Adjoint adjoint(const std::vector<Vec>& loads) const;

  // Nodal -6 P(u_k p_k q_k) on displacement coefficients, the second
  // derivative source of the state equation.
  Vec second_source(int k, const Vec& p, const Vec& q) const;

 private:
  const SpectralGrid* grid_;
  const Trajectory* base_;
  bool cubic_on_;
  Propagator back_;
  std::vector<Mat> jacobian_;  // 3 P_N(u_k^2 .) per node
  Mat base_physical_;          // u_k(x_i), one column per node
};

// Divide raw forcing sensitivities by trapezoid weights to obtain the L_t
// Riesz representative.
ControlSignal forcing_to_gradient(const TimeGrid& grid, const std::vector<Vec>& raw);

}  // namespace mortensen
