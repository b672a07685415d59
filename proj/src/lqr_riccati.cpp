#include "mortensen/lqr_riccati.hpp"

#include <cmath>
#include <sstream>

#include "mortensen/errors.hpp"

namespace mortensen {

namespace {

void axpy(ControlSignal& y, double s, const ControlSignal& x) {
  for (std::size_t k = 0; k < y.values.size(); ++k) y.values[k] += s * x.values[k];
}

void check_grid(const GriddedSignal& s, const TimeGrid& time, const char* name) {
  if (!(s.grid == time) || static_cast<int>(s.values.size()) != time.size()) {
    throw ValidationError(std::string("GLQR ") + name + " lives on a different time grid");
  }
}

}  // namespace

CgResult conjugate_gradient(const std::function<ControlSignal(const ControlSignal&)>& apply,
                            const ControlSignal& rhs, double tol, int max_iter,
                            const ControlSignal* initial) {
  CgResult out;
  ControlSignal r = rhs;
  if (initial) {
    out.x = *initial;
    axpy(r, -1.0, apply(out.x));
  } else {
    out.x = ControlSignal::zero(rhs.grid, rhs.dim());
  }
  double rr = signal_inner(r, r);
  out.residual = std::sqrt(rr);
  if (out.residual <= tol) return out;

  ControlSignal p = r;
  for (int it = 1; it <= max_iter; ++it) {
    const ControlSignal hp = apply(p);
    const double curvature = signal_inner(p, hp);
    if (!(curvature > 0.0)) {
      std::ostringstream msg;
      msg << "non-positive curvature " << curvature
          << " in the linear-quadratic subproblem: linearization point outside the trust region";
      throw TrustRegionError(msg.str());
    }
    const double step = rr / curvature;
    axpy(out.x, step, p);
    axpy(r, -step, hp);
    const double rr_new = signal_inner(r, r);
    out.iterations = it;
    out.residual = std::sqrt(rr_new);
    if (out.residual <= tol) return out;
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t k = 0; k < p.values.size(); ++k) p.values[k] = r.values[k] + beta * p.values[k];
  }
  throw NonconvergenceError("conjugate gradients did not reach tolerance", out.residual);
}

GlqrSolution solve_glqr(const GlqrData& data, double tol, int max_iter,
                        const ControlSignal* initial) {
  if (!data.base) throw ValidationError("GLQR data has no linearization point");
  const Linearization& base = *data.base;
  const Model& model = *base.data().model;
  const TimeGrid& time = base.time();
  const int modes = model.mode_count();
  const Mat& c = model.measurement.matrix();
  if (data.f && (!(data.f->grid == time) || static_cast<int>(data.f->states.size()) != time.size())) {
    throw ValidationError("GLQR f lives on a different time grid");
  }
  if (data.gamma) check_grid(*data.gamma, time, "gamma");
  if (data.L1) check_grid(*data.L1, time, "L1");
  if (data.L2) check_grid(*data.L2, time, "L2");

  // Loads of the cost terms that do not depend on v.
  std::vector<Vec> loads =
      data.f ? base.quadratic_loads(*data.f)
             : std::vector<Vec>(static_cast<std::size_t>(time.size()), Vec::Zero(2 * modes));
  if (data.gamma) {
    for (int k = 0; k < time.size(); ++k) {
      loads[k] -= model.alpha * time.trapezoid_weight(k) * (c.transpose() * data.gamma->values[k]);
    }
  }
  ControlSignal b = forcing_to_gradient(time, base.tangent().adjoint(loads).forcing);
  if (data.L1) axpy(b, 1.0, *data.L1);
  if (data.L2) axpy(b, 1.0, *data.L2);
  for (auto& x : b.values) x = -x;

  const bool gn = data.gauss_newton;
  const CgResult cg = conjugate_gradient(
      [&](const ControlSignal& x) { return base.hessian_apply(&x, nullptr, gn).control; }, b, tol,
      max_iter, initial);

  GlqrSolution out;
  out.v = cg.x;
  out.iterations = cg.iterations;
  const Trajectory z = base.tangent().tangent(nullptr, &out.v.values);
  out.w = z;
  if (data.f) {
    for (std::size_t k = 0; k < out.w.states.size(); ++k) out.w.states[k] += data.f->states[k];
  }

  // p from its own formula; the residual is the defect of v = -p - L2.
  std::vector<Vec> p_loads = base.quadratic_loads(out.w);
  if (data.gamma) {
    for (int k = 0; k < time.size(); ++k) {
      p_loads[k] -= model.alpha * time.trapezoid_weight(k) * (c.transpose() * data.gamma->values[k]);
    }
  }
  if (!gn && model.cubic_on) {
    const std::vector<Vec> curv = base.curvature_loads(z);
    for (std::size_t k = 0; k < p_loads.size(); ++k) p_loads[k] += curv[k];
  }
  out.p = forcing_to_gradient(time, base.tangent().adjoint(p_loads).forcing);
  if (data.L1) axpy(out.p, 1.0, *data.L1);
  ControlSignal defect = out.v;
  axpy(defect, 1.0, out.p);
  if (data.L2) axpy(defect, 1.0, *data.L2);
  out.residual = signal_norm(defect);
  return out;
}

namespace {

// Energy-normalized linearization about the nominal: x^ = S x, S = diag(omega, 1).
class NormalizedModel {
 public:
  explicit NormalizedModel(const Model& model) : model_(model) {
    const int n = model.mode_count();
    const Vec& w = model.grid.frequencies();
    base_ = Mat::Zero(2 * n, 2 * n);
    base_.topRightCorner(n, n) = w.asDiagonal();
    base_.bottomLeftCorner(n, n) = -Mat(w.asDiagonal());
    scale_.resize(2 * n);
    scale_ << w, Vec::Ones(n);
    const Mat ch = model.measurement.matrix() * scale_.cwiseInverse().asDiagonal();
    state_cost_ = model.alpha * ch.transpose() * ch;
  }

  int dim() const { return static_cast<int>(base_.rows()); }
  const Vec& scale() const { return scale_; }
  const Mat& state_cost() const { return state_cost_; }

  // Nominal displacement at t_k + theta dt by cubic Hermite interpolation
  // (a' = b along the nominal).
  Vec nominal_displacement(int k, double theta) const {
    const auto& s = model_.nominal.states;
    if (theta == 0.0) return s[k].displacement;
    if (theta == 1.0) return s[k + 1].displacement;
    const double dt = model_.time().dt();
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    return (2 * t3 - 3 * t2 + 1) * s[k].displacement + (t3 - 2 * t2 + theta) * dt * s[k].velocity +
           (-2 * t3 + 3 * t2) * s[k + 1].displacement + (t3 - t2) * dt * s[k + 1].velocity;
  }

  Mat generator(int k, double theta) const {
    if (!model_.cubic_on) return base_;
    const int n = model_.mode_count();
    const Vec u = model_.grid.to_physical(nominal_displacement(k, theta));
    const Mat m = 3.0 * model_.grid.multiplication_matrix(u.array().square().matrix());
    Mat a = base_;
    a.bottomLeftCorner(n, n) -= m * model_.grid.frequencies().cwiseInverse().asDiagonal();
    return a;
  }

  Mat riccati_rhs(const Mat& pi, const Mat& a) const {
    const int n = model_.mode_count();
    const Mat pa = pi * a;
    return -pa - pa.transpose() - pi.rightCols(n) * pi.bottomRows(n) + state_cost_;
  }

 private:
  const Model& model_;
  Mat base_;
  Vec scale_;
  Mat state_cost_;
};

}  // namespace

RiccatiSolution riccati_nominal(const Model& model, int substeps) {
  if (substeps < 1) throw ValidationError("Riccati substeps must be >= 1");
  const NormalizedModel nm(model);
  const TimeGrid& time = model.time();
  const int steps = time.steps();
  const double h = time.dt() / substeps;
  const Vec& s = nm.scale();

  std::vector<Mat> pi(static_cast<std::size_t>(steps + 1));
  pi[0] = Mat::Identity(nm.dim(), nm.dim());
  for (int k = 0; k < steps; ++k) {
    Mat p = pi[k];
    for (int j = 0; j < substeps; ++j) {
      const double th0 = static_cast<double>(j) / substeps;
      const double th1 = static_cast<double>(j + 1) / substeps;
      const Mat a0 = nm.generator(k, th0);
      const Mat am = nm.generator(k, 0.5 * (th0 + th1));
      const Mat a1 = nm.generator(k, th1);
      const Mat k1 = nm.riccati_rhs(p, a0);
      const Mat k2 = nm.riccati_rhs(p + 0.5 * h * k1, am);
      const Mat k3 = nm.riccati_rhs(p + 0.5 * h * k2, am);
      const Mat k4 = nm.riccati_rhs(p + h * k3, a1);
      p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      p = 0.5 * (p + p.transpose()).eval();
    }
    if (!p.allFinite()) throw NonconvergenceError("Riccati integration produced non-finite values", k);
    pi[k + 1] = std::move(p);
  }

  RiccatiSolution out{time, std::vector<Mat>(static_cast<std::size_t>(steps + 1))};
  for (int k = 0; k <= steps; ++k) {
    out.operators[k] = s.cwiseInverse().asDiagonal() * pi[steps - k] * s.asDiagonal();
  }
  out.operators[steps] = Mat::Identity(nm.dim(), nm.dim());
  return out;
}

double riccati_integral_residual(const Model& model, const RiccatiSolution& solution,
                                 const std::vector<int>& sample_indices, int substeps) {
  const NormalizedModel nm(model);
  const TimeGrid& time = model.time();
  const int steps = time.steps();
  const int n = model.mode_count();
  const double h = time.dt() / substeps;
  const Vec& s = nm.scale();
  auto normalized = [&](int tau_node) -> Mat {
    return s.asDiagonal() * solution.at(steps - tau_node) * s.cwiseInverse().asDiagonal();
  };

  double worst = 0.0;
  for (const int k : sample_indices) {
    if (k < 0 || k > steps) throw ValidationError("Riccati sample index outside the grid");
    const int q = steps - k;  // tau = T - t_k
    const Mat pi_q = normalized(q);
    if (q == 0) {
      worst = std::max(worst, (pi_q - Mat::Identity(nm.dim(), nm.dim())).norm());
      continue;
    }
    // Phi(s_i, tau_q) backward from s = tau_q by RK4 on Phi' = A^(s) Phi.
    std::vector<Mat> integrand(static_cast<std::size_t>(q + 1));
    Mat phi = Mat::Identity(nm.dim(), nm.dim());
    auto load = [&](int i, const Mat& f) {
      const Mat pi_i = normalized(i);
      const Mat middle = nm.state_cost() - pi_i.rightCols(n) * pi_i.bottomRows(n);
      integrand[i] = f.transpose() * middle * f;
    };
    load(q, phi);
    for (int i = q - 1; i >= 0; --i) {
      for (int j = substeps; j > 0; --j) {
        const double th1 = static_cast<double>(j) / substeps;
        const double th0 = static_cast<double>(j - 1) / substeps;
        const Mat a1 = nm.generator(i, th1);
        const Mat am = nm.generator(i, 0.5 * (th0 + th1));
        const Mat a0 = nm.generator(i, th0);
        const Mat k1 = -(a1 * phi);
        const Mat k2 = -(am * (phi + 0.5 * h * k1));
        const Mat k3 = -(am * (phi + 0.5 * h * k2));
        const Mat k4 = -(a0 * (phi + h * k3));
        phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      load(i, phi);
    }
    // Composite Simpson, closing with the 3/8 rule for an odd interval count.
    const double dt = time.dt();
    Mat integral = Mat::Zero(nm.dim(), nm.dim());
    int simpson_end = q;
    if (q % 2 == 1) {
      if (q == 1) {
        integral += 0.5 * dt * (integrand[0] + integrand[1]);
        simpson_end = 0;
      } else {
        simpson_end = q - 3;
        integral += 3.0 * dt / 8.0 *
                    (integrand[q - 3] + 3.0 * integrand[q - 2] + 3.0 * integrand[q - 1] + integrand[q]);
      }
    }
    for (int i = 0; i + 2 <= simpson_end; i += 2) {
      integral += dt / 3.0 * (integrand[i] + 4.0 * integrand[i + 1] + integrand[i + 2]);
    }
    const Mat rebuilt = phi.transpose() * phi + integral;
    worst = std::max(worst, (rebuilt - pi_q).norm() / pi_q.norm());
  }
  return worst;
}

double coercivity_margin(const SpectralGrid& grid, const Mat& op) {
  const int n = grid.mode_count();
  Vec s(2 * n);
  s << grid.frequencies(), Vec::Ones(n);
  Mat sym = s.asDiagonal() * op * s.cwiseInverse().asDiagonal();
  sym = 0.5 * (sym + sym.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

HessianOperator make_hessian(const SpectralGrid& grid, const Mat& op, double time) {
  return {op, coercivity_margin(grid, op), time};
}

EnergyState invert_hessian(const SpectralGrid& grid, const HessianOperator& h,
                           const EnergyState& rhs, double margin_floor) {
  if (!(h.coercivity_margin > margin_floor)) {
    std::ostringstream msg;
    msg << "Hessian coercivity margin " << h.coercivity_margin << " not above floor "
        << margin_floor << ": estimate outside the locally convex regime";
    throw CoercivityLossError(msg.str(), h.coercivity_margin);
  }
  const Vec g = energy_gram_diagonal(grid);
  Mat d = g.asDiagonal() * h.matrix;
  d = 0.5 * (d + d.transpose()).eval();
  const Eigen::LLT<Mat> llt(d);
  if (llt.info() != Eigen::Success) {
    throw CoercivityLossError("Hessian is not positive definite in the energy metric",
                              h.coercivity_margin);
  }
  return EnergyState::from_stacked(llt.solve(g.cwiseProduct(rhs.stacked())));
}

}  // namespace mortensen
