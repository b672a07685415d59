#include "mortensen/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mortensen/errors.hpp"
#include "mortensen/lqr_riccati.hpp"
#include "mortensen/parallel.hpp"

namespace mortensen {

Model Model::create(const SpectralGrid& grid, const MeasurementOp& measurement, double alpha,
                    bool cubic_on, const EnergyState& w0, const TimeGrid& time) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be positive");
  if (measurement.matrix().cols() != 2 * grid.mode_count()) {
    throw ValidationError("measurement operator does not match the grid");
  }
  return {grid, measurement, alpha, cubic_on, nominal_trajectory(grid, w0, time, cubic_on)};
}

OutputSignal Model::shift_output(const OutputSignal& y_abs) const {
  if (!(y_abs.grid == time()) || y_abs.values.size() != nominal.states.size()) {
    throw ValidationError("output lives on a different time grid");
  }
  OutputSignal out = y_abs;
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    out.values[k] -= measurement.apply(nominal.states[k]);
  }
  return out;
}

void OcpData::validate() const {
  if (!model) throw ValidationError("OCP data has no model");
  if (horizon_index < 0 || horizon_index > model->time().steps()) {
    throw ValidationError("horizon index outside the time grid");
  }
  const int n = model->mode_count();
  if (xi.displacement.size() != n || xi.velocity.size() != n) {
    throw ValidationError("xi does not match the grid");
  }
  if (!xi.is_finite()) throw ValidationError("xi is not finite");
  if (!(y.grid == time()) || static_cast<int>(y.values.size()) != horizon_index + 1) {
    throw ValidationError("y must live on the [0, t] prefix of the nominal grid");
  }
  for (const auto& v : y.values) {
    if (v.size() != model->measurement.output_dim()) {
      throw ValidationError("y has the wrong output dimension");
    }
    if (!v.allFinite()) throw ValidationError("y is not finite");
  }
}

OcpData make_ocp_data(const Model& model, int horizon_index, const EnergyState& xi,
                      const OutputSignal& y_full) {
  OcpData data{&model, horizon_index, xi, y_full.prefix(horizon_index)};
  data.validate();
  return data;
}

EnergyState HessianOperator::apply(const EnergyState& x) const {
  return EnergyState::from_stacked(matrix * x.stacked());
}

Trajectory state_of(const OcpData& data, const ControlSignal& v) {
  const Model& m = *data.model;
  const EnergyState final_state = m.nominal.at(data.horizon_index) + data.xi;
  return solve_backward(m.grid, final_state, v, data.time(), m.cubic_on);
}

namespace {

std::vector<Vec> tracking_residual(const OcpData& data, const Trajectory& w) {
  const Model& m = *data.model;
  std::vector<Vec> r(w.states.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    r[k] = data.y.values[k] - m.measurement.apply(w.states[k] - m.nominal.states[k]);
  }
  return r;
}

double cost_from(const OcpData& data, const Trajectory& w, const ControlSignal& v,
                 const std::vector<Vec>& r) {
  const Model& m = *data.model;
  const TimeGrid& time = w.grid;
  const double e0 = energy_norm(m.grid, w.states[0] - m.nominal.states[0]);
  double control = 0.0;
  double tracking = 0.0;
  for (int k = 0; k < time.size(); ++k) {
    const double wk = time.trapezoid_weight(k);
    control += wk * v.values[k].squaredNorm();
    tracking += wk * r[k].squaredNorm();
  }
  return 0.5 * e0 * e0 + 0.5 * control + 0.5 * m.alpha * tracking;
}

ControlSignal add(const ControlSignal& x, const ControlSignal& y, double s = 1.0) {
  ControlSignal out = x;
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += s * y.values[k];
  return out;
}

}  // namespace

double cost(const Trajectory& w, const ControlSignal& v, const OcpData& data) {
  data.validate();
  if (!(w.grid == data.time()) || !(v.grid == data.time())) {
    throw ValidationError("trajectory or control lives on a different time grid");
  }
  return cost_from(data, w, v, tracking_residual(data, w));
}

Linearization::Linearization(const OcpData& data, ControlSignal v)
    : data_(&data),
      v_(std::move(v)),
      w_(state_of(data, v_)),
      tangent_(data.model->grid, w_, data.model->cubic_on) {
  const Model& m = *data.model;
  const TimeGrid& time = w_.grid;
  const Mat& c = m.measurement.matrix();
  residual_ = tracking_residual(data, w_);
  cost_ = cost_from(data, w_, v_, residual_);

  std::vector<Vec> loads(static_cast<std::size_t>(time.size()));
  for (int k = 0; k < time.size(); ++k) {
    loads[k] = -m.alpha * time.trapezoid_weight(k) * (c.transpose() * residual_[k]);
  }
  const Vec g = energy_gram_diagonal(m.grid);
  loads[0] += g.cwiseProduct((w_.states[0] - m.nominal.states[0]).stacked());
  first_ = tangent_.adjoint(loads);
  adjoint_state_ = forcing_to_gradient(time, first_.forcing);
  gradient_ = add(v_, adjoint_state_);
}

std::vector<Vec> Linearization::quadratic_loads(const Trajectory& z) const {
  const Model& m = *data_->model;
  const TimeGrid& time = w_.grid;
  const Mat& c = m.measurement.matrix();
  std::vector<Vec> loads(static_cast<std::size_t>(time.size()));
  for (int k = 0; k < time.size(); ++k) {
    const Vec zk = z.states[k].stacked();
    loads[k] = m.alpha * time.trapezoid_weight(k) * (c.transpose() * (c * zk));
  }
  loads[0] += energy_gram_diagonal(m.grid).cwiseProduct(z.states[0].stacked());
  return loads;
}

std::vector<Vec> Linearization::curvature_loads(const Trajectory& z) const {
  const int n = data_->model->mode_count();
  std::vector<Vec> loads(z.states.size(), Vec::Zero(2 * n));
  if (!tangent_.cubic_on()) return loads;
  for (std::size_t k = 0; k < loads.size(); ++k) {
    loads[k].head(n) = tangent_.second_source(static_cast<int>(k), z.states[k].displacement,
                                              first_.forcing[k]);
  }
  return loads;
}

Linearization::Product Linearization::hessian_apply(const ControlSignal* dv,
                                                    const EnergyState* deta,
                                                    bool gauss_newton) const {
  const Trajectory z = tangent_.tangent(deta, dv ? &dv->values : nullptr);
  std::vector<Vec> loads = quadratic_loads(z);
  if (!gauss_newton && tangent_.cubic_on()) {
    const std::vector<Vec> curv = curvature_loads(z);
    for (std::size_t k = 0; k < loads.size(); ++k) loads[k] += curv[k];
  }
  const TangentModel::Adjoint adj = tangent_.adjoint(loads);
  Product out{forcing_to_gradient(w_.grid, adj.forcing), adj.final_dual};
  if (dv) out.control = add(out.control, *dv);
  return out;
}

GradientResult adjoint_gradient(const ControlSignal& v, const OcpData& data) {
  data.validate();
  const Linearization lin(data, v);
  return {lin.gradient(), lin.state(), lin.adjoint_state()};
}

namespace {

void check_trust(const OcpData& data, double radius) {
  const double xi = energy_norm(data.model->grid, data.xi);
  const double y = signal_norm(data.y);
  if (std::max(xi, y) > radius) {
    std::ostringstream msg;
    msg << "data outside trust region (|xi|_E = " << xi << ", |y| = " << y << ", radius "
        << radius << "): local well-posedness of the estimation problem is not certified; "
        << "use smaller disturbances or a larger trust_radius";
    throw TrustRegionError(msg.str());
  }
}

}  // namespace

OcpSolution solve_ocp(const OcpData& data, const OcpOptions& options,
                      const ControlSignal* warm_start) {
  data.validate();
  check_trust(data, options.trust_radius);
  const TimeGrid time = data.time();
  ControlSignal v = warm_start ? *warm_start : ControlSignal::zero(time, data.model->mode_count());
  if (!(v.grid == time)) throw ValidationError("warm start lives on a different time grid");

  std::optional<Linearization> lin;
  lin.emplace(data, v);
  for (int it = 0;; ++it) {
    const double gnorm = signal_norm(lin->gradient());
    if (gnorm <= options.tol) {
      return {lin->state(), v, lin->adjoint_state(), lin->cost(), gnorm, it};
    }
    if (it == options.max_iter) {
      throw NonconvergenceError("OCP Newton iteration did not reach tolerance", gnorm);
    }

    ControlSignal rhs = lin->gradient();
    for (auto& x : rhs.values) x = -x;
    const double cg_tol = std::max(options.cg_tol, std::min(0.1, std::sqrt(gnorm)) * gnorm);
    auto solve_step = [&](bool gn) {
      return conjugate_gradient(
                 [&](const ControlSignal& x) { return lin->hessian_apply(&x, nullptr, gn).control; },
                 rhs, cg_tol, options.cg_max_iter)
          .x;
    };
    ControlSignal step;
    try {
      step = solve_step(options.gauss_newton);
    } catch (const TrustRegionError&) {
      if (options.gauss_newton) throw;
      step = solve_step(true);
    }

    const double j0 = lin->cost();
    const double slope = signal_inner(lin->gradient(), step);
    double s = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40 && !accepted; ++ls, s *= 0.5) {
      ControlSignal trial = add(v, step, s);
      if (signal_norm(trial) > 10.0 * options.trust_radius) continue;
      try {
        const Trajectory w = state_of(data, trial);
        const double j = cost_from(data, w, trial, tracking_residual(data, w));
        if (j <= j0 + 1e-4 * s * slope + 1e-13 * std::abs(j0)) {
          v = std::move(trial);
          accepted = true;
        }
      } catch (const DivergenceError&) {
      }
    }
    if (!accepted) {
      if (signal_norm(add(v, step)) > 10.0 * options.trust_radius) {
        throw TrustRegionError(
            "OCP iterates left the trust region: the control estimate is not locally unique");
      }
      throw NonconvergenceError("OCP line search failed", gnorm);
    }
    lin.emplace(data, v);
  }
}

double value(const OcpData& data, const OcpOptions& options) {
  return solve_ocp(data, options).value;
}

EnergyState value_gradient(const OcpData& data, const OcpOptions& options,
                           const OcpSolution* solved) {
  std::optional<OcpSolution> local;
  if (!solved) solved = &local.emplace(solve_ocp(data, options));
  const Linearization lin(data, solved->v_star);
  const Vec g = energy_gram_diagonal(data.model->grid);
  return EnergyState::from_stacked(lin.final_dual().cwiseQuotient(g));
}

HessianOperator value_hessian(const OcpData& data, const OcpOptions& options,
                              const OcpSolution* solved) {
  std::optional<OcpSolution> local;
  if (!solved) solved = &local.emplace(solve_ocp(data, options));
  const Linearization lin(data, solved->v_star);
  const SpectralGrid& grid = data.model->grid;
  const int dim = 2 * grid.mode_count();

  Mat dual(dim, dim);
  parallel_for(dim, [&](int j) {
    const EnergyState eta = EnergyState::from_stacked(Vec::Unit(dim, j));
    GlqrData glqr;
    glqr.base = &lin;
    glqr.f = lin.tangent().tangent(&eta, nullptr);
    glqr.gauss_newton = options.gauss_newton;
    if (!options.gauss_newton && data.model->cubic_on) {
      const TangentModel::Adjoint curv = lin.tangent().adjoint(lin.curvature_loads(*glqr.f));
      glqr.L1 = forcing_to_gradient(lin.time(), curv.forcing);
    }
    const GlqrSolution sol = solve_glqr(glqr, options.cg_tol, options.cg_max_iter);
    dual.col(j) = lin.hessian_apply(&sol.v, &eta, options.gauss_newton).final_dual;
  });
  const Mat sym = 0.5 * (dual + dual.transpose());
  const Mat op = energy_gram_diagonal(grid).cwiseInverse().asDiagonal() * sym;
  return make_hessian(grid, op, data.time().t_final());
}

double value_unshifted(const Model& model, int horizon_index, const EnergyState& xi_abs,
                       const OutputSignal& y_abs_full, const OcpOptions& options) {
  const OcpData data = make_ocp_data(model, horizon_index, xi_abs - model.nominal.at(horizon_index),
                                     model.shift_output(y_abs_full));
  const OcpSolution sol = solve_ocp(data, options);

  // Re-evaluate the cost from absolute quantities only.
  const TimeGrid time = data.time();
  const Trajectory w = solve_backward(model.grid, xi_abs, sol.v_star, time, model.cubic_on);
  const EnergyState w0 = model.nominal.at(0);
  const double e0 = energy_norm(model.grid, w.at(0) - w0);
  double control = 0.0;
  double tracking = 0.0;
  for (int k = 0; k < time.size(); ++k) {
    const double wk = time.trapezoid_weight(k);
    control += wk * sol.v_star.values[k].squaredNorm();
    tracking += wk * (y_abs_full.values[k] - model.measurement.apply(w.at(k))).squaredNorm();
  }
  return 0.5 * e0 * e0 + 0.5 * control + 0.5 * model.alpha * tracking;
}

double hjb_residual(const Model& model, int horizon_index, const EnergyState& xi_abs,
                    const OutputSignal& y_abs_full, int fd_steps, const OcpOptions& options) {
  const int n = horizon_index;
  if (fd_steps < 1 || n - fd_steps < 0 || n + fd_steps > model.time().steps()) {
    throw ValidationError("hjb_residual needs fd_steps >= 1 inside the time grid");
  }
  const double v_plus = value_unshifted(model, n + fd_steps, xi_abs, y_abs_full, options);
  const double v_minus = value_unshifted(model, n - fd_steps, xi_abs, y_abs_full, options);
  const double dvdt = (v_plus - v_minus) / (2.0 * fd_steps * model.time().dt());

  const OcpData data = make_ocp_data(model, n, xi_abs - model.nominal.at(n),
                                     model.shift_output(y_abs_full));
  const EnergyState g = value_gradient(data, options);
  EnergyState f{xi_abs.velocity,
                -model.grid.eigenvalues().cwiseProduct(xi_abs.displacement)};
  if (model.cubic_on) f.velocity -= cubic(model.grid, xi_abs.displacement);
  const double drift = energy_inner(model.grid, g, f);
  const double control = 0.5 * g.velocity.squaredNorm();
  const double tracking =
      0.5 * model.alpha * (y_abs_full.values[n] - model.measurement.apply(xi_abs)).squaredNorm();
  return std::abs(dvdt + drift + control - tracking);
}

}  // namespace mortensen
