#pragma once

// Generalized linear-quadratic subproblem about a linearization point of the
// OCP, and the Riccati equation for the value-function Hessian along the
// nominal trajectory.

#include <functional>
#include <optional>
#include <vector>

#include "mortensen/ocp.hpp"

namespace mortensen {

// min 1/2 ||w(0)||_E^2 + 1/2 ||v||^2 + alpha/2 ||gamma - C w||^2
//     + 1/2 <state-map curvature>[v, v] + (L1 + L2, v)
// s.t. w = D_v S [v] + f.  Absent fields are zero.
struct GlqrData {
  const Linearization* base = nullptr;
  std::optional<Trajectory> f;
  std::optional<OutputSignal> gamma;
  std::optional<ControlSignal> L1;
  std::optional<ControlSignal> L2;
  bool gauss_newton = false;  // drop the curvature term
};

struct GlqrSolution {
  Trajectory w;
  ControlSignal v;
  ControlSignal p;
  double residual = 0.0;  // ||H v + b||_{L_t}
  int iterations = 0;
};

GlqrSolution solve_glqr(const GlqrData& data, double tol, int max_iter = 500,
                        const ControlSignal* initial = nullptr);

// Conjugate gradients in the L_t inner product. Stops at ||r|| <= tol.
// Throws TrustRegionError on non-positive curvature, NonconvergenceError on
// iteration exhaustion.
struct CgResult {
  ControlSignal x;
  double residual = 0.0;
  int iterations = 0;
};
CgResult conjugate_gradient(const std::function<ControlSignal(const ControlSignal&)>& apply,
                            const ControlSignal& rhs, double tol, int max_iter,
                            const ControlSignal* initial = nullptr);

// P(t_k) for the nominal problem, P(T) = Id, stored in coefficient space
// (E-self-adjoint). hessian_at(k) = D^2 V(t_k, 0, 0) = P(T - t_k).
struct RiccatiSolution {
  TimeGrid grid;
  std::vector<Mat> operators;

  const Mat& at(int k) const { return operators.at(static_cast<std::size_t>(k)); }
  const Mat& hessian_at(int k) const { return at(grid.steps() - k); }
};

// Forward RK4 for Pi(tau) = D^2 V(tau, 0, 0) in energy-normalized
// coordinates with `substeps` RK4 steps per grid step:
//   Pi' = -Pi A^ - A^T Pi - Pi B B^T Pi + alpha C^T C,  Pi(0) = Id.
RiccatiSolution riccati_nominal(const Model& model, int substeps = 1);

// Max over the sampled grid indices of the relative defect of the integral
// form, with transition matrices from RK4 and Simpson quadrature.
double riccati_integral_residual(const Model& model, const RiccatiSolution& solution,
                                 const std::vector<int>& sample_indices, int substeps = 1);

// Smallest eigenvalue of the E-symmetrized form of a coefficient operator.
double coercivity_margin(const SpectralGrid& grid, const Mat& op);

HessianOperator make_hessian(const SpectralGrid& grid, const Mat& op, double time);

// H^{-1} rhs by Cholesky in the E-metric.
EnergyState invert_hessian(const SpectralGrid& grid, const HessianOperator& h,
                           const EnergyState& rhs, double margin_floor = 1e-8);

}  // namespace mortensen
