#include <doctest.h>

#include <cmath>
#include <random>

#include "mortensen/errors.hpp"
#include "mortensen/lqr_riccati.hpp"

using namespace mortensen;

namespace {

Model make_model(int n, bool cubic_on, const Mat* c_matrix = nullptr, double t_final = 0.5,
                 double dt = 0.01) {
  const SpectralGrid grid(n);
  EnergyState w0 = EnergyState::zero(n);
  w0.displacement[0] = 1.0;
  w0.velocity[1] = 0.5;
  const MeasurementOp c = c_matrix ? MeasurementOp(grid, *c_matrix) : MeasurementOp::low_modes(grid, 2);
  return Model::create(grid, c, 1.0, cubic_on, w0, TimeGrid::uniform(t_final, dt));
}

ControlSignal wave(const TimeGrid& time, int n, double freq, double phase) {
  ControlSignal v = ControlSignal::zero(time, n);
  for (int k = 0; k < time.size(); ++k) {
    for (int j = 0; j < n; ++j) v.values[k][j] = std::sin(freq * (j + 1) * time.time(k) + phase) / (j + 1);
  }
  return v;
}

ControlSignal combine(double a, const ControlSignal& x, double b, const ControlSignal& y) {
  ControlSignal out = x;
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = a * x.values[k] + b * y.values[k];
  return out;
}

double distance(const ControlSignal& x, const ControlSignal& y) { return signal_norm(combine(1, x, -1, y)); }

}  // namespace

TEST_CASE("conjugate gradients on a dense SPD system") {
  const TimeGrid time(1.0, 3);
  const int n = 2, dim = 8;
  Mat r = Mat::Random(dim, dim);
  const Mat spd = r * r.transpose() + dim * Mat::Identity(dim, dim);
  // Operator expressed in the L_t inner product: (x, Ay)_L = x^T W spd y.
  Vec w(dim);
  for (int k = 0; k < 4; ++k) w.segment(2 * k, 2).setConstant(time.trapezoid_weight(k));
  auto flat = [&](const ControlSignal& s) {
    Vec x(dim);
    for (int k = 0; k < 4; ++k) x.segment(2 * k, 2) = s.values[k];
    return x;
  };
  auto unflat = [&](const Vec& x) {
    ControlSignal s = ControlSignal::zero(time, n);
    for (int k = 0; k < 4; ++k) s.values[k] = x.segment(2 * k, 2);
    return s;
  };
  const Mat op = w.cwiseInverse().asDiagonal() * spd;
  const Vec b = Vec::Random(dim);
  const CgResult res = conjugate_gradient([&](const ControlSignal& x) { return unflat(op * flat(x)); },
                                          unflat(b), 1e-13, 100);
  CHECK((flat(res.x) - op.lu().solve(b)).norm() < 1e-10);
  CHECK(res.iterations <= dim + 1);

  const Mat indefinite = -Mat::Identity(dim, dim);
  CHECK_THROWS_AS(conjugate_gradient([&](const ControlSignal& x) { return unflat(indefinite * flat(x)); },
                                     unflat(b), 1e-13, 100),
                  TrustRegionError);
}

TEST_CASE("GLQR solutions are linear in the data and unique") {
  const Model m = make_model(6, true);
  const OcpData data = make_ocp_data(m, 30, EnergyState::zero(6), OutputSignal::zero(m.time(), 2));
  const Linearization base(data, ControlSignal::zero(data.time(), 6));
  const ControlSignal l1 = wave(data.time(), 6, 3.0, 0.1), l2 = wave(data.time(), 6, 5.0, 1.3);
  auto solve = [&](const ControlSignal& load, const ControlSignal* init = nullptr) {
    GlqrData g;
    g.base = &base;
    g.L2 = load;
    return solve_glqr(g, 1e-13, 500, init);
  };
  const GlqrSolution a = solve(l1), b = solve(l2), ab = solve(combine(2.0, l1, -0.5, l2));
  CHECK(distance(ab.v, combine(2.0, a.v, -0.5, b.v)) < 1e-10);
  CHECK(a.residual < 1e-12);
  // Optimality v + p + L2 = 0.
  CHECK(signal_norm(combine(1, combine(1, a.v, 1, a.p), 1, l1)) < 1e-10);
  const ControlSignal start = wave(data.time(), 6, 7.0, 0.4);
  CHECK(distance(solve(l1, &start).v, a.v) < 1e-10);
}

TEST_CASE("Riccati RK4 converges at fourth order") {
  const Model m = make_model(6, true, nullptr, 0.5, 0.05);
  const Mat ref = riccati_nominal(m, 16).hessian_at(10);
  const double e1 = (riccati_nominal(m, 1).hessian_at(10) - ref).norm();
  const double e2 = (riccati_nominal(m, 2).hessian_at(10) - ref).norm();
  CHECK(std::log2(e1 / e2) >= 3.5);
}

TEST_CASE("Riccati matches the value Hessian up to the time-step error") {
  // The discrete value Hessian approaches the continuous Riccati operator at
  // second order in dt.
  for (const bool cubic : {false, true}) {
    std::vector<double> gaps;
    for (const double dt : {0.01, 0.005}) {
      const Model m = make_model(6, cubic, nullptr, 0.5, dt);
      const RiccatiSolution ric = riccati_nominal(m);
      const int k = m.time().steps() / 2;
      const OcpData d = make_ocp_data(m, k, EnergyState::zero(6), OutputSignal::zero(m.time(), 2));
      const HessianOperator h = value_hessian(d, OcpOptions{});
      gaps.push_back((h.matrix - ric.hessian_at(k)).norm() / h.matrix.norm());
      CHECK((ric.hessian_at(0) - Mat::Identity(12, 12)).norm() < 1e-14);
      CHECK(riccati_integral_residual(m, ric, {k / 2, k, 2 * k}) < 1e-6);
    }
    CHECK(gaps[1] < 1e-4);
    CHECK(std::log2(gaps[0] / gaps[1]) > 1.8);
  }
}

TEST_CASE("without measurements the Hessian stays below the identity") {
  const Mat zero = Mat::Zero(1, 12);
  const Model m = make_model(6, false, &zero);
  const RiccatiSolution ric = riccati_nominal(m);
  const Vec gs = energy_gram_diagonal(m.grid).cwiseSqrt();
  for (int k = 0; k <= m.time().steps(); k += 5) {
    // E-symmetrized operator S P S^{-1} has spectrum in (0, 1].
    const Mat sym = gs.asDiagonal() * ric.hessian_at(k) * gs.cwiseInverse().asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (sym + sym.transpose()));
    CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("Hessian inversion") {
  const Model m = make_model(6, true);
  const RiccatiSolution ric = riccati_nominal(m);
  const HessianOperator h = make_hessian(m.grid, ric.hessian_at(40), m.time().time(40));
  CHECK(h.coercivity_margin == doctest::Approx(coercivity_margin(m.grid, h.matrix)));
  EnergyState rhs = EnergyState::zero(6);
  rhs.displacement[1] = 0.4;
  rhs.velocity[3] = -1.0;
  const EnergyState x = invert_hessian(m.grid, h, rhs);
  CHECK(energy_norm(m.grid, h.apply(x) - rhs) < 1e-12);

  Mat singular = Mat::Identity(12, 12);
  singular(3, 3) = 0.0;
  CHECK_THROWS_AS(invert_hessian(m.grid, make_hessian(m.grid, singular, 0.0), rhs), CoercivityLossError);
}
