#pragma once

// Spectral Galerkin representation of the energy space E = H^1_0 x L^2 on the
// interval (0, L) with homogeneous Dirichlet conditions.
//
// Functions are stored by their coefficients in the L^2-orthonormal sine basis
//   phi_k(x) = sqrt(2/L) sin(k pi x / L),   k = 1..N,
// which diagonalizes the Dirichlet Laplacian with eigenvalues
//   lambda_k = (k pi / L)^2.
// The energy Gram matrix is therefore G = diag(lambda_1..lambda_N, 1..1).

#include <Eigen/Dense>

#include <numbers>
#include <vector>

namespace mortensen {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class SpectralGrid {
 public:
  SpectralGrid(int mode_count, double domain_length = std::numbers::pi,
               double dealias_factor = 2.0);

  int mode_count() const { return mode_count_; }
  double domain_length() const { return domain_length_; }
  double dealias_factor() const { return dealias_factor_; }

  // lambda_k, strictly increasing.
  const Vec& eigenvalues() const { return eigenvalues_; }
  // omega_k = sqrt(lambda_k).
  const Vec& frequencies() const { return frequencies_; }

  // Interior quadrature nodes x_i = i L / (K + 1), i = 1..K, K >= dealias * N.
  int quadrature_size() const { return static_cast<int>(nodes_.size()); }
  const Vec& quadrature_nodes() const { return nodes_; }
  double quadrature_weight() const { return weight_; }

  // u(x_i) for coefficients a (length N).
  Vec to_physical(const Vec& coefficients) const;
  // Discrete L^2 projection onto the first N modes. Exact for trigonometric
  // integrands whose combined frequency stays below 2(K + 1).
  Vec to_spectral(const Vec& values) const;
  // Quadrature of a nodal function.
  double integrate(const Vec& values) const { return weight_ * values.sum(); }

  // K x N synthesis matrix, Phi(i, k) = phi_k(x_i).
  const Mat& synthesis() const { return synthesis_; }

  // Dense N x N matrix of z -> P_N(f z) for the nodal multiplier f. Symmetric.
  Mat multiplication_matrix(const Vec& nodal_factor) const;

 private:
  int mode_count_;
  double domain_length_;
  double dealias_factor_;
  Vec eigenvalues_;
  Vec frequencies_;
  Vec nodes_;
  double weight_;
  Mat synthesis_;
};

// Element of the truncated energy space: displacement and velocity
// coefficients in the sine basis.
struct EnergyState {
  Vec displacement;
  Vec velocity;

  EnergyState() = default;
  EnergyState(Vec a, Vec b) : displacement(std::move(a)), velocity(std::move(b)) {}

  static EnergyState zero(int n) { return {Vec::Zero(n), Vec::Zero(n)}; }
  // Inverse of stacked().
  static EnergyState from_stacked(const Vec& x);

  int mode_count() const { return static_cast<int>(displacement.size()); }
  // (a_1..a_N, b_1..b_N).
  Vec stacked() const;
  bool is_finite() const { return displacement.allFinite() && velocity.allFinite(); }

  EnergyState& operator+=(const EnergyState& o);
  EnergyState& operator-=(const EnergyState& o);
  EnergyState& operator*=(double s);
};

EnergyState operator+(EnergyState x, const EnergyState& y);
EnergyState operator-(EnergyState x, const EnergyState& y);
EnergyState operator*(double s, EnergyState x);

// Diagonal of the energy Gram matrix G (length 2N).
Vec energy_gram_diagonal(const SpectralGrid& grid);

// (x, y)_E = sum lambda_k a_k a'_k + sum b_k b'_k.
double energy_inner(const SpectralGrid& grid, const EnergyState& x, const EnergyState& y);
double energy_norm(const SpectralGrid& grid, const EnergyState& x);

// e^{At} applied to state; exact per-mode rotation, any real t.
EnergyState group_action(const SpectralGrid& grid, const EnergyState& state, double t);

// Sine coefficients of P_N(u^3), computed on the dealiased grid.
Vec cubic(const SpectralGrid& grid, const Vec& displacement);
// Coefficients of P_N(3 u^2 z).
Vec linearized_cubic(const SpectralGrid& grid, const Vec& base, const Vec& dir);
// Coefficients of P_N(6 u p q).
Vec second_linearized_cubic(const SpectralGrid& grid, const Vec& base, const Vec& p,
                            const Vec& q);

// Quadrature of u^4 over the domain; its gradient in a is 4 * cubic(a).
double quartic_integral(const SpectralGrid& grid, const Vec& displacement);

// H(w) = 1/2 ||w||_E^2 + 1/4 int u^4, conserved by the undisturbed cubic wave.
double hamiltonian(const SpectralGrid& grid, const EnergyState& state);

// Bounded measurement C : E -> R^m, stored as an m x 2N matrix acting on
// stacked coefficients.
class MeasurementOp {
 public:
  MeasurementOp() = default;
  MeasurementOp(const SpectralGrid& grid, Mat matrix);

  // y_j = a_j for j = 1..m (displacement of the m lowest modes).
  static MeasurementOp low_modes(const SpectralGrid& grid, int m);
  // y_i = du/dt(x_i) for the given probe positions.
  static MeasurementOp velocity_probe(const SpectralGrid& grid, const std::vector<double>& points);

  int output_dim() const { return static_cast<int>(matrix_.rows()); }
  const Mat& matrix() const { return matrix_; }

  Vec apply(const EnergyState& w) const;
  // C* y = G^{-1} C^T y, the adjoint with respect to the energy inner product.
  EnergyState adjoint(const Vec& y) const;
  // Operator norm ||C||_{L(E;Y)}.
  double operator_norm() const;

 private:
  Mat matrix_;
  Vec gram_inverse_;
  Vec gram_sqrt_;
};

}  // namespace mortensen
