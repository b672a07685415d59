#include "mortensen/observer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mortensen/errors.hpp"

namespace mortensen {

GainMode GainMode::full_hessian(int refresh_every) {
  if (refresh_every < 1) throw ValidationError("gain.refresh_every must be >= 1");
  return {Kind::full_hessian, refresh_every};
}

std::string GainMode::name() const {
  return kind == Kind::riccati_nominal ? "riccati_nominal"
                                       : "full_hessian(" + std::to_string(refresh_every) + ")";
}

namespace {

const Model& model_of(const ObserverConfig& cfg) {
  if (!cfg.model) throw ValidationError("observer config has no model");
  return *cfg.model;
}

void check_output(const Model& m, const OutputSignal& y, double radius) {
  if (!(y.grid == m.time()) || static_cast<int>(y.values.size()) != m.time().size()) {
    throw ValidationError("output lives on a different time grid than the model");
  }
  for (const auto& v : y.values) {
    if (v.size() != m.measurement.output_dim()) throw ValidationError("output has the wrong dimension");
    if (!v.allFinite()) throw ValidationError("output is not finite");
  }
  const double norm = signal_norm(y);
  if (norm > radius) {
    std::ostringstream msg;
    msg << "output norm " << norm << " exceeds trust radius " << radius
        << ": the observer is only certified for small measurement deviations";
    throw TrustRegionError(msg.str());
  }
}

// K = H^{-1} C* = (G H)^{-1} C^T, after a margin check.
Mat gain_matrix(const Model& m, const HessianOperator& h, double floor) {
  if (!(h.coercivity_margin > floor)) {
    std::ostringstream msg;
    msg << "gain Hessian margin " << h.coercivity_margin << " at t = " << h.grid_time
        << " not above floor " << floor;
    throw CoercivityLossError(msg.str(), h.coercivity_margin);
  }
  const Vec g = energy_gram_diagonal(m.grid);
  Mat d = g.asDiagonal() * h.matrix;
  d = 0.5 * (d + d.transpose()).eval();
  const Eigen::LLT<Mat> llt(d);
  if (llt.info() != Eigen::Success) {
    throw CoercivityLossError("gain Hessian is not positive definite", h.coercivity_margin);
  }
  return llt.solve(m.measurement.matrix().transpose());
}

struct RiccatiGains {
  std::optional<RiccatiSolution> owned;
  const RiccatiSolution* sol = nullptr;
};

const RiccatiSolution& riccati_for(const ObserverConfig& cfg, RiccatiGains& holder) {
  if (cfg.riccati) return *cfg.riccati;
  holder.owned.emplace(riccati_nominal(model_of(cfg)));
  return *holder.owned;
}

// Nonlinear coupling and output injection in the shifted observer equation.
class ObserverField {
 public:
  ObserverField(const Model& m, const OutputSignal& y) : m_(m), y_(y) {
    if (m.cubic_on) {
      cubic_nominal_.reserve(m.nominal.states.size());
      for (const auto& s : m.nominal.states) cubic_nominal_.push_back(cubic(m.grid, s.displacement));
    }
  }

  Vec operator()(int k, const Vec& x, const Mat& gain) const {
    const int n = m_.mode_count();
    Vec out = m_.alpha * gain * (y_.values[k] - m_.measurement.matrix() * x);
    if (m_.cubic_on) {
      const Vec a = m_.nominal.states[k].displacement + x.head(n);
      out.tail(n) -= cubic(m_.grid, a) - cubic_nominal_[k];
    }
    return out;
  }

 private:
  const Model& m_;
  const OutputSignal& y_;
  std::vector<Vec> cubic_nominal_;
};

// Heun half step of x' = f(x).
template <class F>
void half_kick(Vec& x, double h, const F& f) {
  const Vec f0 = f(x);
  const Vec x1 = x + h * f0;
  x += 0.5 * h * (f0 + f(x1));
}

void rotate(const Propagator& rot, Vec& x, int n) {
  Vec a = x.head(n);
  Vec b = x.tail(n);
  rot.apply(a, b);
  x << a, b;
}

// Max over coarse samples of ||x_n - e^{A t_n} x_0 - int e^{A(t_n - s)} N(s) ds||_E,
// trapezoid quadrature of the Duhamel integral.
double mild_defect(const Model& m, const std::vector<Vec>& x, const std::vector<Vec>& field,
                   int samples) {
  const TimeGrid& time = m.time();
  const int steps = time.steps();
  if (steps == 0 || samples < 1) return 0.0;
  double worst = 0.0;
  for (int j = 1; j <= samples; ++j) {
    const int n = static_cast<int>(std::lround(static_cast<double>(j) * steps / samples));
    if (n == 0) continue;
    const TimeGrid sub = time.prefix(n);
    EnergyState acc = group_action(m.grid, EnergyState::from_stacked(x[0]), time.time(n));
    for (int k = 0; k <= n; ++k) {
      const EnergyState nk = EnergyState::from_stacked(field[k]);
      acc += sub.trapezoid_weight(k) * group_action(m.grid, nk, time.time(n) - time.time(k));
    }
    worst = std::max(worst, energy_norm(m.grid, EnergyState::from_stacked(x[n]) - acc));
  }
  return worst;
}

ObserverRun finish_run(const Model& m, const std::vector<Vec>& x, std::vector<double> margins,
                       double residual, int iterations) {
  ObserverRun run;
  run.shifted.grid = m.time();
  run.absolute.grid = m.time();
  for (std::size_t k = 0; k < x.size(); ++k) {
    run.shifted.states.push_back(EnergyState::from_stacked(x[k]));
    run.absolute.states.push_back(m.nominal.states[k] + run.shifted.states.back());
  }
  run.gain_margins = std::move(margins);
  run.residual = residual;
  run.iterations = iterations;
  return run;
}

}  // namespace

ObserverRun run_observer(const OutputSignal& y, const GainMode& gain, const ObserverConfig& cfg) {
  const Model& m = model_of(cfg);
  check_output(m, y, cfg.trust_radius);
  const TimeGrid& time = m.time();
  const int n = m.mode_count();
  const int steps = time.steps();
  const double h = 0.5 * time.dt();
  const Propagator rot(m.grid, time.dt());
  const ObserverField field(m, y);

  std::vector<Mat> gains(static_cast<std::size_t>(steps + 1));
  std::vector<double> margins(static_cast<std::size_t>(steps + 1));
  int refreshes = 0;
  RiccatiGains holder;
  if (gain.kind == GainMode::Kind::riccati_nominal) {
    const RiccatiSolution& ric = riccati_for(cfg, holder);
    for (int k = 0; k <= steps; ++k) {
      const HessianOperator hk = make_hessian(m.grid, ric.hessian_at(k), time.time(k));
      gains[k] = gain_matrix(m, hk, cfg.margin_floor);
      margins[k] = hk.coercivity_margin;
    }
  }

  std::vector<Vec> x(static_cast<std::size_t>(steps + 1));
  x[0] = Vec::Zero(2 * n);
  Mat held;
  double held_margin = 1.0;
  for (int k = 0; k <= steps; ++k) {
    if (gain.kind == GainMode::Kind::full_hessian) {
      if (k == 0) {
        held = gain_matrix(m, make_hessian(m.grid, Mat::Identity(2 * n, 2 * n), 0.0),
                           cfg.margin_floor);
        held_margin = 1.0;
      } else if (k % gain.refresh_every == 0) {
        const OcpData data = make_ocp_data(m, k, EnergyState::from_stacked(x[k]), y);
        const HessianOperator hk = value_hessian(data, cfg.ocp);
        held = gain_matrix(m, hk, cfg.margin_floor);
        held_margin = hk.coercivity_margin;
        ++refreshes;
      }
      gains[k] = held;
      margins[k] = held_margin;
    }
    if (k == steps) break;

    Vec s = x[k];
    half_kick(s, h, [&](const Vec& z) { return field(k, z, gains[k]); });
    rotate(rot, s, n);
    const Mat& next_gain = gain.kind == GainMode::Kind::full_hessian ? held : gains[k + 1];
    half_kick(s, h, [&](const Vec& z) { return field(k + 1, z, next_gain); });
    if (!s.allFinite()) throw DivergenceError("observer state became non-finite", k + 1);
    x[k + 1] = std::move(s);
  }

  std::vector<Vec> f(x.size());
  for (int k = 0; k <= steps; ++k) f[k] = field(k, x[k], gains[k]);
  return finish_run(m, x, std::move(margins), mild_defect(m, x, f, cfg.residual_samples),
                    refreshes);
}

ObserverRun fixed_point_observer(const OutputSignal& y, const ObserverConfig& cfg) {
  const Model& m = model_of(cfg);
  check_output(m, y, cfg.trust_radius);
  const TimeGrid& time = m.time();
  const int n = m.mode_count();
  const int steps = time.steps();
  const double h = 0.5 * time.dt();
  const Propagator rot(m.grid, time.dt());
  const ObserverField field(m, y);
  const Mat& c = m.measurement.matrix();

  RiccatiGains holder;
  const RiccatiSolution& ric = riccati_for(cfg, holder);
  std::vector<Mat> gains(static_cast<std::size_t>(steps + 1));
  std::vector<Mat> linear(static_cast<std::size_t>(steps + 1));
  std::vector<Mat> jac(static_cast<std::size_t>(steps + 1));
  std::vector<double> margins(static_cast<std::size_t>(steps + 1));
  for (int k = 0; k <= steps; ++k) {
    const HessianOperator hk = make_hessian(m.grid, ric.hessian_at(k), time.time(k));
    gains[k] = gain_matrix(m, hk, cfg.margin_floor);
    margins[k] = hk.coercivity_margin;
    // F(t_k) = [0 0; -3 P(w~^2 .) 0] - alpha H^{-1} C* C
    linear[k] = -m.alpha * gains[k] * c;
    jac[k] = Mat::Zero(n, n);
    if (m.cubic_on) {
      const Vec u = m.grid.to_physical(m.nominal.states[k].displacement);
      jac[k] = 3.0 * m.grid.multiplication_matrix(u.array().square().matrix());
      linear[k].bottomLeftCorner(n, n) -= jac[k];
    }
  }

  // Remainder after removing the part linear in x: nonlinear coupling plus
  // output injection of y.
  auto source = [&](int k, const Vec& x) -> Vec { return field(k, x, gains[k]) - linear[k] * x; };

  std::vector<Vec> current(static_cast<std::size_t>(steps + 1), Vec::Zero(2 * n));
  double previous = -1.0;
  for (int it = 1; it <= cfg.fixed_point_max_iter; ++it) {
    std::vector<Vec> g(current.size());
    for (int k = 0; k <= steps; ++k) g[k] = source(k, current[k]);

    std::vector<Vec> next(current.size());
    next[0] = Vec::Zero(2 * n);
    for (int k = 0; k < steps; ++k) {
      Vec s = next[k];
      half_kick(s, h, [&](const Vec& z) { return Vec(linear[k] * z + g[k]); });
      rotate(rot, s, n);
      half_kick(s, h, [&](const Vec& z) { return Vec(linear[k + 1] * z + g[k + 1]); });
      next[k + 1] = std::move(s);
    }

    double diff = 0.0;
    for (int k = 0; k <= steps; ++k) {
      diff = std::max(diff, energy_norm(m.grid, EnergyState::from_stacked(next[k] - current[k])));
    }
    current = std::move(next);
    if (!std::isfinite(diff)) {
      throw DivergenceError("fixed-point iterates became non-finite", it);
    }
    if (diff <= cfg.fixed_point_tol) {
      std::vector<Vec> f(current.size());
      for (int k = 0; k <= steps; ++k) f[k] = field(k, current[k], gains[k]);
      return finish_run(m, current, std::move(margins),
                        mild_defect(m, current, f, cfg.residual_samples), it);
    }
    if (previous > 0.0 && it >= 3 && diff > previous) {
      std::ostringstream msg;
      msg << "fixed-point map is not contracting: successive differences grew by factor "
          << diff / previous << " at iteration " << it;
      throw DivergenceError(msg.str(), it);
    }
    previous = diff;
  }
  throw NonconvergenceError("fixed-point iteration did not reach tolerance", previous);
}

ArgminResult argmin_estimator(const OutputSignal& y, const std::vector<int>& sample_indices,
                              const ObserverConfig& cfg) {
  const Model& m = model_of(cfg);
  check_output(m, y, cfg.trust_radius);
  std::vector<int> indices = sample_indices;
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  const int n = m.mode_count();

  ArgminResult out;
  EnergyState xi = EnergyState::zero(n);
  for (const int t : indices) {
    if (t < 0 || t > m.time().steps()) throw ValidationError("argmin sample index outside the grid");
    out.indices.push_back(t);
    if (t == 0) {
      out.minimizers.push_back(EnergyState::zero(n));
      out.absolute.push_back(m.nominal.at(0));
      out.margins.push_back(1.0);
      out.newton_iterations.push_back(0);
      out.gradient_norms.push_back(0.0);
      continue;
    }

    std::optional<HessianOperator> hess;
    std::optional<ControlSignal> warm;
    double gnorm = 0.0;
    double prev = -1.0;
    int it = 0;
    for (;; ++it) {
      const OcpData data = make_ocp_data(m, t, xi, y);
      const OcpSolution sol = solve_ocp(data, cfg.ocp, warm ? &*warm : nullptr);
      warm = sol.v_star;
      const EnergyState g = value_gradient(data, cfg.ocp, &sol);
      gnorm = energy_norm(m.grid, g);
      if (gnorm <= cfg.argmin_tol) break;
      if (it == cfg.argmin_max_iter) {
        throw NonconvergenceError("argmin Newton iteration did not reach tolerance", gnorm);
      }
      // Chord iteration: keep the Hessian while the gradient contracts fast.
      if (!hess || (prev > 0.0 && gnorm > 0.5 * prev)) hess = value_hessian(data, cfg.ocp, &sol);
      prev = gnorm;
      xi += invert_hessian(m.grid, *hess, -1.0 * g, cfg.margin_floor);
    }
    if (!hess) {
      const OcpData data = make_ocp_data(m, t, xi, y);
      hess = value_hessian(data, cfg.ocp);
    }
    out.minimizers.push_back(xi);
    out.absolute.push_back(m.nominal.at(t) + xi);
    out.margins.push_back(hess->coercivity_margin);
    out.newton_iterations.push_back(it);
    out.gradient_norms.push_back(gnorm);
  }
  return out;
}

KalmanResult kalman_bucy(const OutputSignal& y_abs, const ObserverConfig& cfg) {
  const Model& m = model_of(cfg);
  if (m.cubic_on) throw ValidationError("kalman_bucy requires cubic_on = false");
  if (!(y_abs.grid == m.time()) || static_cast<int>(y_abs.values.size()) != m.time().size()) {
    throw ValidationError("output lives on a different time grid than the model");
  }
  const TimeGrid& time = m.time();
  const int n = m.mode_count();
  const int dim = 2 * n;
  Vec s(dim);
  s << m.grid.frequencies(), Vec::Ones(n);
  Mat a = Mat::Zero(dim, dim);
  a.topRightCorner(n, n) = m.grid.frequencies().asDiagonal();
  a.bottomLeftCorner(n, n) = -Mat(m.grid.frequencies().asDiagonal());
  const Mat ch = m.measurement.matrix() * s.cwiseInverse().asDiagonal();
  const double alpha = m.alpha;

  // Sigma' = A S + S A^T + B B^T - alpha S C^T C S;  x' = A x + alpha S C^T (y - C x).
  auto rhs = [&](const Mat& sig, const Vec& x, const Vec& yk, Mat& dsig, Vec& dx) {
    const Mat as = a * sig;
    const Mat sc = sig * ch.transpose();
    dsig = as + as.transpose() - alpha * sc * sc.transpose();
    dsig.bottomRightCorner(n, n) += Mat::Identity(n, n);
    dx = a * x + alpha * sc * (yk - ch * x);
  };

  KalmanResult out;
  out.estimate.grid = time;
  Mat sig = Mat::Identity(dim, dim);
  Vec x = s.cwiseProduct(m.nominal.at(0).stacked());
  auto record = [&] {
    out.estimate.states.push_back(EnergyState::from_stacked(x.cwiseQuotient(s)));
    out.covariance.push_back(s.cwiseInverse().asDiagonal() * sig * s.asDiagonal());
  };
  record();
  const double h = time.dt();
  for (int k = 0; k < time.steps(); ++k) {
    const Vec& y0 = y_abs.values[k];
    const Vec& y1 = y_abs.values[k + 1];
    // Four-point cubic interpolation at the midpoint where neighbours exist.
    Vec ym = 0.5 * (y0 + y1);
    if (k >= 1 && k + 2 <= time.steps()) {
      ym = (9.0 * (y0 + y1) - y_abs.values[k - 1] - y_abs.values[k + 2]) / 16.0;
    }
    Mat d1, d2, d3, d4;
    Vec e1, e2, e3, e4;
    rhs(sig, x, y0, d1, e1);
    rhs(sig + 0.5 * h * d1, x + 0.5 * h * e1, ym, d2, e2);
    rhs(sig + 0.5 * h * d2, x + 0.5 * h * e2, ym, d3, e3);
    rhs(sig + h * d3, x + h * e3, y1, d4, e4);
    sig += h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
    sig = 0.5 * (sig + sig.transpose()).eval();
    x += h / 6.0 * (e1 + 2.0 * e2 + 2.0 * e3 + e4);
    const Eigen::LLT<Mat> llt(sig);
    if (llt.info() != Eigen::Success || !x.allFinite()) {
      throw DivergenceError("Kalman-Bucy covariance lost positive definiteness", k + 1);
    }
    record();
  }
  return out;
}

Estimate Estimate::from_trajectory(std::string name, const Trajectory& t,
                                   std::vector<double> margins) {
  Estimate e{std::move(name), {}, t.states, std::move(margins)};
  for (int k = 0; k < static_cast<int>(t.states.size()); ++k) e.indices.push_back(k);
  return e;
}

Estimate Estimate::from_argmin(std::string name, const ArgminResult& r) {
  return {std::move(name), r.indices, r.absolute, r.margins};
}

Comparison compare(const SpectralGrid& grid, const std::vector<Estimate>& estimates,
                   const Trajectory& truth) {
  Comparison out;
  std::vector<std::map<int, const EnergyState*>> lookup;
  for (const auto& e : estimates) {
    if (e.indices.size() != e.states.size()) {
      throw ValidationError("estimate " + e.name + " has mismatched indices and states");
    }
    Comparison::Errors err;
    err.name = e.name;
    std::map<int, const EnergyState*> at;
    for (std::size_t i = 0; i < e.indices.size(); ++i) {
      const int k = e.indices[i];
      if (k < 0 || k >= static_cast<int>(truth.states.size())) {
        throw ValidationError("estimate " + e.name + " has an index outside the truth grid");
      }
      const double d = energy_norm(grid, e.states[i] - truth.states[k]);
      err.indices.push_back(k);
      err.errors.push_back(d);
      err.sup_error = std::max(err.sup_error, d);
      at[k] = &e.states[i];
    }
    if (!err.errors.empty()) err.terminal_error = err.errors.back();
    if (!e.margins.empty()) err.min_margin = *std::min_element(e.margins.begin(), e.margins.end());
    out.errors.push_back(std::move(err));
    lookup.push_back(std::move(at));
  }
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    for (std::size_t j = i + 1; j < estimates.size(); ++j) {
      Comparison::Discrepancy d{estimates[i].name, estimates[j].name, 0, 0.0};
      for (const auto& [k, s] : lookup[i]) {
        const auto it = lookup[j].find(k);
        if (it == lookup[j].end()) continue;
        ++d.common_samples;
        d.sup_discrepancy = std::max(d.sup_discrepancy, energy_norm(grid, *s - *it->second));
      }
      out.discrepancies.push_back(d);
    }
  }
  return out;
}

}  // namespace mortensen
