#pragma once

// Minimum-energy optimal control problem in the shifted frame:
//   min J(w, v) = 1/2 ||w(0) - w~(0)||_E^2 + 1/2 ||v||_{L_t}^2
//                 + alpha/2 ||y - C(w - w~)||_{Y_t}^2
//   s.t. w solves the backward state equation with w(t) = w~(t) + xi.
// The reduced problem in v is solved by Newton-CG; all derivatives come from
// the discrete tangent/adjoint sweeps of the integrator.

#include <optional>
#include <vector>

#include "mortensen/discretization.hpp"
#include "mortensen/dynamics.hpp"
#include "mortensen/linearization.hpp"

namespace mortensen {

// Fixed ingredients shared by every problem on one scenario.
struct Model {
  SpectralGrid grid;
  MeasurementOp measurement;
  double alpha;
  bool cubic_on;
  Trajectory nominal;

  static Model create(const SpectralGrid& grid, const MeasurementOp& measurement, double alpha,
                      bool cubic_on, const EnergyState& w0, const TimeGrid& time);
  int mode_count() const { return grid.mode_count(); }
  const TimeGrid& time() const { return nominal.grid; }
  // y_abs - C w~ on the full grid.
  OutputSignal shift_output(const OutputSignal& y_abs) const;
};

struct OcpData {
  const Model* model = nullptr;
  int horizon_index = 0;
  EnergyState xi;
  OutputSignal y;  // relative output on [0, t]

  TimeGrid time() const { return model->time().prefix(horizon_index); }
  // Checks dimensions and grids; throws ValidationError.
  void validate() const;
};

// Restricts a full-horizon relative output to [0, t_n].
OcpData make_ocp_data(const Model& model, int horizon_index, const EnergyState& xi,
                      const OutputSignal& y_full);

struct OcpOptions {
  double tol = 1e-9;
  int max_iter = 30;
  double trust_radius = 1.0;
  double cg_tol = 1e-12;  // absolute floor on CG residuals
  int cg_max_iter = 500;
  bool gauss_newton = false;
};

struct OcpSolution {
  Trajectory w_star;
  ControlSignal v_star;
  ControlSignal p_star;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

// E-self-adjoint operator on stacked coefficients.
struct HessianOperator {
  Mat matrix;
  double coercivity_margin = 0.0;
  double grid_time = 0.0;

  EnergyState apply(const EnergyState& x) const;
};

// Everything needed to differentiate the reduced cost at a control v.
class Linearization {
 public:
  Linearization(const OcpData& data, ControlSignal v);
  Linearization(const Linearization&) = delete;
  Linearization& operator=(const Linearization&) = delete;

  const OcpData& data() const { return *data_; }
  const ControlSignal& control() const { return v_; }
  const Trajectory& state() const { return w_; }
  const TangentModel& tangent() const { return tangent_; }
  const TimeGrid& time() const { return w_.grid; }

  double cost() const { return cost_; }
  // v + p, the L_t representative of D_v J.
  const ControlSignal& gradient() const { return gradient_; }
  // p, the adjoint state.
  const ControlSignal& adjoint_state() const { return adjoint_state_; }
  // Stacked dual of D_xi J.
  const Vec& final_dual() const { return first_.final_dual; }
  // Raw first-order forcing sensitivities (weights times p).
  const std::vector<Vec>& forcing_dual() const { return first_.forcing; }

  // Loads of the quadratic part of the cost for a deviation z:
  // G z_0 + alpha w_0 C^T C z_0 at node 0, alpha w_k C^T C z_k elsewhere.
  std::vector<Vec> quadratic_loads(const Trajectory& z) const;
  // Loads from the second derivative of the state map, paired with the
  // first-order sensitivities. Zero when the cubic term is off.
  std::vector<Vec> curvature_loads(const Trajectory& z) const;

  struct Product {
    ControlSignal control;  // L_t representative
    Vec final_dual;         // stacked Euclidean dual on E
  };
  // Hessian of J(v, xi) applied to (dv, deta); either may be null.
  Product hessian_apply(const ControlSignal* dv, const EnergyState* deta,
                        bool gauss_newton = false) const;

 private:
  const OcpData* data_;
  ControlSignal v_;
  Trajectory w_;
  TangentModel tangent_;
  std::vector<Vec> residual_;
  double cost_ = 0.0;
  TangentModel::Adjoint first_;
  ControlSignal adjoint_state_;
  ControlSignal gradient_;
};

Trajectory state_of(const OcpData& data, const ControlSignal& v);

double cost(const Trajectory& w, const ControlSignal& v, const OcpData& data);

struct GradientResult {
  ControlSignal grad;
  Trajectory w;
  ControlSignal p;
};
GradientResult adjoint_gradient(const ControlSignal& v, const OcpData& data);

OcpSolution solve_ocp(const OcpData& data, const OcpOptions& options,
                      const ControlSignal* warm_start = nullptr);

double value(const OcpData& data, const OcpOptions& options);
// Riesz representative of D_xi V; reuses `solved` when given.
EnergyState value_gradient(const OcpData& data, const OcpOptions& options,
                           const OcpSolution* solved = nullptr);
HessianOperator value_hessian(const OcpData& data, const OcpOptions& options,
                              const OcpSolution* solved = nullptr);

// Value of the unshifted problem with absolute terminal state and output.
// Independent residual path; agrees with value() under the shift.
double value_unshifted(const Model& model, int horizon_index, const EnergyState& xi_abs,
                       const OutputSignal& y_abs_full, const OcpOptions& options);

// |d_t V + (D V, F(xi)) + 1/2 ||B* D V||^2 - alpha/2 ||y_abs(t) - C xi||^2|
// in the unshifted frame, d_t V by central differences with fd_steps grid steps.
double hjb_residual(const Model& model, int horizon_index, const EnergyState& xi_abs,
                    const OutputSignal& y_abs_full, int fd_steps, const OcpOptions& options);

}  // namespace mortensen
