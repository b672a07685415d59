#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mortensen/discretization.hpp"
#include "mortensen/errors.hpp"

using namespace mortensen;

namespace {

EnergyState random_state(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  EnergyState x = EnergyState::zero(n);
  for (int k = 0; k < n; ++k) {
    x.displacement[k] = g(rng) / (k + 1);
    x.velocity[k] = g(rng);
  }
  return x;
}

}  // namespace

TEST_CASE("eigenvalues and quadrature nodes") {
  const double L = 2.0;
  const SpectralGrid grid(6, L, 2.0);
  for (int k = 1; k <= 6; ++k) {
    CHECK(grid.eigenvalues()[k - 1] == doctest::Approx(std::pow(k * std::numbers::pi / L, 2)).epsilon(1e-15));
  }
  CHECK(grid.quadrature_size() >= 12);
  const Vec g = energy_gram_diagonal(grid);
  CHECK(g.size() == 12);
  CHECK(g[0] == doctest::Approx(grid.eigenvalues()[0]));
  CHECK(g[11] == 1.0);
}

TEST_CASE("physical round trip") {
  const SpectralGrid grid(16);
  std::mt19937_64 rng(1);
  const EnergyState x = random_state(rng, 16);
  CHECK((grid.to_spectral(grid.to_physical(x.displacement)) - x.displacement).norm() < 1e-13);
}

TEST_CASE("cubic of a single sine matches the triple-angle identity") {
  // sin^3 x = (3 sin x - sin 3x) / 4 on (0, pi); phi_1 = sqrt(2/pi) sin x.
  const SpectralGrid grid(8);
  const double c = std::sqrt(std::numbers::pi / 2.0);
  Vec a = Vec::Zero(8);
  a[0] = c;
  const Vec u3 = cubic(grid, a);
  Vec expected = Vec::Zero(8);
  expected[0] = 0.75 * c;
  expected[2] = -0.25 * c;
  CHECK((u3 - expected).norm() < 1e-13);
}

TEST_CASE("cubic derivatives agree with finite differences") {
  const SpectralGrid grid(10);
  std::mt19937_64 rng(2);
  const Vec a = random_state(rng, 10).displacement;
  const Vec z = random_state(rng, 10).displacement;
  const Vec q = random_state(rng, 10).displacement;
  const double h = 1e-6;
  const Vec fd = (cubic(grid, a + h * z) - cubic(grid, a - h * z)) / (2 * h);
  CHECK((fd - linearized_cubic(grid, a, z)).norm() < 1e-8 * fd.norm());
  const Vec fd2 = (linearized_cubic(grid, a + h * q, z) - linearized_cubic(grid, a - h * q, z)) / (2 * h);
  CHECK((fd2 - second_linearized_cubic(grid, a, z, q)).norm() < 1e-8 * fd2.norm());
  // The gradient of the quartic integral is 4 u^3.
  const double d = (quartic_integral(grid, a + h * z) - quartic_integral(grid, a - h * z)) / (2 * h);
  CHECK(d == doctest::Approx(4.0 * cubic(grid, a).dot(z)).epsilon(1e-8));
}

TEST_CASE("group action is the exact per-mode rotation") {
  const SpectralGrid grid(5, 3.0);
  std::mt19937_64 rng(3);
  const EnergyState x = random_state(rng, 5);
  const double t = 1.7;
  const EnergyState y = group_action(grid, x, t);
  for (int k = 0; k < 5; ++k) {
    const double w = grid.frequencies()[k];
    CHECK(y.displacement[k] ==
          doctest::Approx(x.displacement[k] * std::cos(w * t) + x.velocity[k] / w * std::sin(w * t)));
    CHECK(y.velocity[k] ==
          doctest::Approx(-w * x.displacement[k] * std::sin(w * t) + x.velocity[k] * std::cos(w * t)));
  }
  const EnergyState back = group_action(grid, group_action(grid, x, 0.4), -0.4);
  CHECK(energy_norm(grid, back - x) < 1e-14);
  CHECK(energy_norm(grid, y) == doctest::Approx(energy_norm(grid, x)).epsilon(1e-14));
}

TEST_CASE("energy inner product and Hamiltonian") {
  const SpectralGrid grid(6);
  std::mt19937_64 rng(4);
  const EnergyState x = random_state(rng, 6), y = random_state(rng, 6);
  CHECK(energy_inner(grid, x, y) == doctest::Approx(energy_inner(grid, y, x)));
  CHECK(std::abs(energy_inner(grid, x, y)) <= energy_norm(grid, x) * energy_norm(grid, y));
  const double e = energy_norm(grid, x);
  CHECK(hamiltonian(grid, x) ==
        doctest::Approx(0.5 * e * e + 0.25 * quartic_integral(grid, x.displacement)));
}

TEST_CASE("measurement adjoint and operator norm") {
  const SpectralGrid grid(8);
  std::mt19937_64 rng(5);
  const MeasurementOp lm = MeasurementOp::low_modes(grid, 3);
  CHECK(lm.output_dim() == 3);
  // sup |a_1| / ||w||_E = 1 / omega_1 = 1 on (0, pi).
  CHECK(lm.operator_norm() == doctest::Approx(1.0));
  const MeasurementOp probe = MeasurementOp::velocity_probe(grid, {0.7, 1.9});
  for (const MeasurementOp* c : {&lm, &probe}) {
    for (int i = 0; i < 5; ++i) {
      const EnergyState w = random_state(rng, 8);
      Vec y = Vec::Random(c->output_dim());
      CHECK(c->apply(w).dot(y) == doctest::Approx(energy_inner(grid, w, c->adjoint(y))).epsilon(1e-12));
      CHECK(c->apply(w).norm() <= c->operator_norm() * energy_norm(grid, w) * (1 + 1e-12));
    }
  }
  // Probe reads the physical velocity.
  EnergyState w = EnergyState::zero(8);
  w.velocity[1] = 1.0;
  CHECK(probe.apply(w)[0] == doctest::Approx(std::sqrt(2.0 / std::numbers::pi) * std::sin(2 * 0.7)));
}
