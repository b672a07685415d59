#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "mortensen/errors.hpp"
#include "mortensen/observer.hpp"

using namespace mortensen;

namespace {

Model make_model(int n, bool cubic_on, int m = 2, double t_final = 0.5, double dt = 0.005) {
  const SpectralGrid grid(n);
  EnergyState w0 = EnergyState::zero(n);
  w0.displacement[0] = 1.0;
  if (n > 1) w0.velocity[1] = 0.5;
  return Model::create(grid, MeasurementOp::low_modes(grid, m), 1.0, cubic_on, w0,
                       TimeGrid::uniform(t_final, dt));
}

ObserverConfig config_for(const Model& m, const RiccatiSolution* ric) {
  ObserverConfig cfg;
  cfg.model = &m;
  cfg.riccati = ric;
  cfg.ocp.tol = 1e-11;
  return cfg;
}

// Relative output of a truth started from an offset initial state.
OutputSignal relative_output(const Model& m, double amp) {
  EnergyState w0 = m.nominal.at(0);
  w0.displacement[0] += amp;
  w0.velocity[0] -= amp;
  const Trajectory truth =
      solve_forward(m.grid, w0, ControlSignal::zero(m.time(), m.mode_count()), m.time(), m.cubic_on);
  OutputSignal y = OutputSignal::zero(m.time(), m.measurement.output_dim());
  for (int k = 0; k < m.time().size(); ++k) y.values[k] = m.measurement.apply(truth.at(k) - m.nominal.at(k));
  return y;
}

}  // namespace

TEST_CASE("zero data keeps every estimator on the nominal") {
  const Model m = make_model(6, true);
  const RiccatiSolution ric = riccati_nominal(m);
  const ObserverConfig cfg = config_for(m, &ric);
  const OutputSignal y = OutputSignal::zero(m.time(), 2);
  for (const GainMode& g : {GainMode::riccati(), GainMode::full_hessian(25)}) {
    const ObserverRun run = run_observer(y, g, cfg);
    for (const auto& s : run.shifted.states) CHECK(energy_norm(m.grid, s) == 0.0);
    CHECK(sup_energy_distance(m.grid, run.absolute, m.nominal) == 0.0);
  }
  const ArgminResult am = argmin_estimator(y, {0, 50, 100}, cfg);
  for (const auto& x : am.minimizers) CHECK(energy_norm(m.grid, x) < 1e-12);
}

TEST_CASE("single-mode Kalman-Bucy covariance matches the Hamiltonian exponential") {
  const Model m = make_model(1, false, 1, 1.0, 0.001);
  const RiccatiSolution ric = riccati_nominal(m);
  const ObserverConfig cfg = config_for(m, &ric);
  OutputSignal y_abs = OutputSignal::zero(m.time(), 1);
  for (int k = 0; k < m.time().size(); ++k) y_abs.values[k] = m.measurement.apply(m.nominal.at(k));
  const KalmanResult kb = kalman_bucy(y_abs, cfg);

  // Normalized coordinates (omega a, b): A = [[0, w], [-w, 0]], B = e_2, C^ = C S^{-1}.
  const double w = m.grid.frequencies()[0];
  Mat a(2, 2);
  a << 0, w, -w, 0;
  Mat bbt = Mat::Zero(2, 2);
  bbt(1, 1) = 1.0;
  Mat ch(1, 2);
  ch << 1.0 / w, 0.0;
  Mat ham(4, 4);
  ham << a, bbt, m.alpha * ch.transpose() * ch, -a.transpose();
  Mat s = Mat::Zero(2, 2);
  s(0, 0) = w;
  s(1, 1) = 1.0;
  for (const int k : {250, 500, 1000}) {
    const Mat e = (ham * m.time().time(k)).exp();
    const Mat x = e.topLeftCorner(2, 2) + e.topRightCorner(2, 2);
    const Mat yb = e.bottomLeftCorner(2, 2) + e.bottomRightCorner(2, 2);
    const Mat sigma = s.inverse() * (x * yb.inverse()) * s;
    CHECK((kb.covariance[k] - sigma).norm() < 1e-9 * sigma.norm());
    // Covariance is the inverse of the value Hessian.
    CHECK((kb.covariance[k] * ric.hessian_at(k) - Mat::Identity(2, 2)).norm() < 1e-8);
  }
}

TEST_CASE("linear case: observer, fixed point, argmin and Kalman-Bucy coincide") {
  const Model m = make_model(6, false);
  const RiccatiSolution ric = riccati_nominal(m);
  const ObserverConfig cfg = config_for(m, &ric);
  const OutputSignal y = relative_output(m, 0.05);
  OutputSignal y_abs = y;
  for (int k = 0; k < m.time().size(); ++k) y_abs.values[k] += m.measurement.apply(m.nominal.at(k));

  const ObserverRun run = run_observer(y, GainMode::riccati(), cfg);
  const ObserverRun fp = fixed_point_observer(y, cfg);
  const ArgminResult am = argmin_estimator(y, {20, 60, 100}, cfg);
  const KalmanResult kb = kalman_bucy(y_abs, cfg);
  CHECK(sup_energy_distance(m.grid, run.absolute, kb.estimate) < 1e-6);
  CHECK(sup_energy_distance(m.grid, run.absolute, fp.absolute) < 1e-10);
  for (std::size_t i = 0; i < am.indices.size(); ++i) {
    CHECK(energy_norm(m.grid, am.absolute[i] - run.absolute.at(am.indices[i])) < 1e-6);
  }
  CHECK(run.residual < 1e-6);
  CHECK(fp.iterations <= 3);
}

TEST_CASE("nonlinear observer and fixed point agree") {
  const Model m = make_model(6, true);
  const RiccatiSolution ric = riccati_nominal(m);
  const ObserverConfig cfg = config_for(m, &ric);
  const OutputSignal y = relative_output(m, 0.05);
  const ObserverRun run = run_observer(y, GainMode::riccati(), cfg);
  const ObserverRun fp = fixed_point_observer(y, cfg);
  CHECK(sup_energy_distance(m.grid, run.absolute, fp.absolute) < 1e-8);
  CHECK(run.residual < 1e-6);
  for (const double g : run.gain_margins) CHECK(g > 0.0);
  // A refreshed full-Hessian gain stays close to the nominal gain for small data.
  const ObserverRun full = run_observer(y, GainMode::full_hessian(20), cfg);
  CHECK(sup_energy_distance(m.grid, run.absolute, full.absolute) < 1e-3);
}

TEST_CASE("comparison metrics") {
  const Model m = make_model(4, true);
  const Estimate truth = Estimate::from_trajectory("truth", m.nominal);
  ArgminResult am;
  am.indices = {0, 50};
  am.absolute = {m.nominal.at(0), m.nominal.at(50)};
  am.minimizers = {EnergyState::zero(4), EnergyState::zero(4)};
  am.margins = {1.0, 0.5};
  const Comparison c = compare(m.grid, {truth, Estimate::from_argmin("argmin", am)}, m.nominal);
  REQUIRE(c.errors.size() == 2);
  CHECK(c.errors[0].sup_error == 0.0);
  CHECK(c.errors[1].min_margin.value() == 0.5);
  REQUIRE(c.discrepancies.size() == 1);
  CHECK(c.discrepancies[0].common_samples == 2);
  CHECK(c.discrepancies[0].sup_discrepancy == 0.0);
}

TEST_CASE("observer preconditions") {
  const Model cubic = make_model(4, true);
  ObserverConfig cfg = config_for(cubic, nullptr);
  CHECK_THROWS_AS(kalman_bucy(OutputSignal::zero(cubic.time(), 2), cfg), ValidationError);
  cfg.trust_radius = 1e-6;
  CHECK_THROWS_AS(run_observer(relative_output(cubic, 0.05), GainMode::riccati(), cfg), TrustRegionError);
  CHECK_THROWS_AS(run_observer(OutputSignal::zero(cubic.time(), 3), GainMode::riccati(), cfg), ValidationError);
}
