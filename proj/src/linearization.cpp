#include "mortensen/linearization.hpp"

#include "mortensen/errors.hpp"

namespace mortensen {

TangentModel::TangentModel(const SpectralGrid& grid, const Trajectory& base, bool cubic_on)
    : grid_(&grid), base_(&base), cubic_on_(cubic_on), back_(grid, -base.grid.dt()) {
  const int nodes = base.grid.size();
  if (static_cast<int>(base.states.size()) != nodes) {
    throw ValidationError("base trajectory does not match its grid");
  }
  if (!cubic_on) return;
  base_physical_.resize(grid.quadrature_size(), nodes);
  jacobian_.reserve(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k) {
    base_physical_.col(k) = grid.to_physical(base.states[k].displacement);
    const Vec u2 = base_physical_.col(k).array().square();
    jacobian_.push_back(3.0 * grid.multiplication_matrix(u2));
  }
}

Trajectory TangentModel::tangent(const EnergyState* final_dir,
                                 const std::vector<Vec>* forcing) const {
  const int n = horizon();
  const int modes = grid_->mode_count();
  const double h = 0.5 * base_->grid.dt();
  if (forcing && static_cast<int>(forcing->size()) != n + 1) {
    throw ValidationError("tangent forcing has the wrong number of samples");
  }

  Trajectory out{base_->grid, std::vector<EnergyState>(static_cast<std::size_t>(n + 1))};
  Vec a = final_dir ? final_dir->displacement : Vec::Zero(modes);
  Vec b = final_dir ? final_dir->velocity : Vec::Zero(modes);
  out.states[n] = EnergyState(a, b);
  for (int k = n - 1; k >= 0; --k) {
    if (cubic_on_) b += h * (jacobian_[k + 1] * a);
    if (forcing) b -= h * (*forcing)[k + 1];
    back_.apply(a, b);
    if (cubic_on_) b += h * (jacobian_[k] * a);
    if (forcing) b -= h * (*forcing)[k];
    out.states[k] = EnergyState(a, b);
  }
  return out;
}

TangentModel::Adjoint TangentModel::adjoint(const std::vector<Vec>& loads) const {
  const int n = horizon();
  const int modes = grid_->mode_count();
  const double h = 0.5 * base_->grid.dt();
  if (static_cast<int>(loads.size()) != n + 1) {
    throw ValidationError("adjoint loads have the wrong number of samples");
  }

  Adjoint out;
  out.forcing.assign(static_cast<std::size_t>(n + 1), Vec::Zero(modes));
  Vec la = loads[0].head(modes);
  Vec lb = loads[0].tail(modes);
  for (int k = 0; k < n; ++k) {
    out.forcing[k] -= h * lb;
    if (cubic_on_) la += h * (jacobian_[k] * lb);
    back_.apply_transpose(la, lb);
    out.forcing[k + 1] -= h * lb;
    if (cubic_on_) la += h * (jacobian_[k + 1] * lb);
    la += loads[k + 1].head(modes);
    lb += loads[k + 1].tail(modes);
  }
  out.final_dual.resize(2 * modes);
  out.final_dual << la, lb;
  return out;
}

Vec TangentModel::second_source(int k, const Vec& p, const Vec& q) const {
  if (!cubic_on_) return Vec::Zero(grid_->mode_count());
  const Vec pp = grid_->to_physical(p);
  const Vec qq = grid_->to_physical(q);
  const Vec f = -6.0 * base_physical_.col(k).array() * pp.array() * qq.array();
  return grid_->to_spectral(f);
}

ControlSignal forcing_to_gradient(const TimeGrid& grid, const std::vector<Vec>& raw) {
  ControlSignal out;
  out.grid = grid;
  out.values.reserve(raw.size());
  for (int k = 0; k < grid.size(); ++k) {
    const double w = grid.trapezoid_weight(k);
    out.values.push_back(w > 0.0 ? Vec(raw[k] / w) : Vec::Zero(raw[k].size()));
  }
  return out;
}

Trajectory solve_linearized(const SpectralGrid& grid, const Trajectory& base,
                            const LinearizedInputs& inputs, bool cubic_on) {
  const TangentModel model(grid, base, cubic_on);
  std::vector<Vec> forcing;
  const bool has_forcing = inputs.control_dir || inputs.source;
  if (has_forcing) {
    forcing.assign(static_cast<std::size_t>(base.grid.size()), Vec::Zero(grid.mode_count()));
    for (const auto* s : {&inputs.control_dir, &inputs.source}) {
      if (!*s) continue;
      if (!((*s)->grid == base.grid) || (*s)->values.size() != forcing.size()) {
        throw ValidationError("linearized forcing lives on a different time grid");
      }
      for (std::size_t k = 0; k < forcing.size(); ++k) forcing[k] += (*s)->values[k];
    }
  }
  const EnergyState* eta = inputs.final_dir ? &*inputs.final_dir : nullptr;
  return model.tangent(eta, has_forcing ? &forcing : nullptr);
}

}  // namespace mortensen
