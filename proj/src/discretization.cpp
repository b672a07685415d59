#include "mortensen/discretization.hpp"

#include <cmath>
#include <string>

#include "mortensen/errors.hpp"

namespace mortensen {

SpectralGrid::SpectralGrid(int mode_count, double domain_length, double dealias_factor)
    : mode_count_(mode_count), domain_length_(domain_length), dealias_factor_(dealias_factor) {
  if (mode_count < 1) throw ValidationError("mode_count must be positive");
  if (!(domain_length > 0.0)) throw ValidationError("domain_length must be positive");
  if (!(dealias_factor >= 1.0)) throw ValidationError("dealias_factor must be >= 1");

  const double pi = std::numbers::pi;
  eigenvalues_.resize(mode_count);
  frequencies_.resize(mode_count);
  for (int k = 0; k < mode_count; ++k) {
    frequencies_[k] = (k + 1) * pi / domain_length;
    eigenvalues_[k] = frequencies_[k] * frequencies_[k];
  }

  const int quad = static_cast<int>(std::ceil(dealias_factor * mode_count - 1e-12));
  nodes_.resize(quad);
  weight_ = domain_length / (quad + 1);
  synthesis_.resize(quad, mode_count);
  const double scale = std::sqrt(2.0 / domain_length);
  for (int i = 0; i < quad; ++i) {
    nodes_[i] = (i + 1) * weight_;
    for (int k = 0; k < mode_count; ++k) {
      // Integer argument keeps the DST-I matrix exactly orthogonal up to rounding.
      synthesis_(i, k) = scale * std::sin(pi * static_cast<double>((i + 1) * (k + 1)) / (quad + 1));
    }
  }
}

Vec SpectralGrid::to_physical(const Vec& coefficients) const {
  return synthesis_ * coefficients;
}

Vec SpectralGrid::to_spectral(const Vec& values) const {
  return weight_ * (synthesis_.transpose() * values);
}

Mat SpectralGrid::multiplication_matrix(const Vec& nodal_factor) const {
  const Mat weighted = (weight_ * nodal_factor).asDiagonal() * synthesis_;
  Mat m = synthesis_.transpose() * weighted;
  return 0.5 * (m + m.transpose());
}

EnergyState EnergyState::from_stacked(const Vec& x) {
  const auto n = x.size() / 2;
  return {x.head(n), x.tail(n)};
}

Vec EnergyState::stacked() const {
  Vec x(displacement.size() + velocity.size());
  x << displacement, velocity;
  return x;
}

EnergyState& EnergyState::operator+=(const EnergyState& o) {
  displacement += o.displacement;
  velocity += o.velocity;
  return *this;
}

EnergyState& EnergyState::operator-=(const EnergyState& o) {
  displacement -= o.displacement;
  velocity -= o.velocity;
  return *this;
}

EnergyState& EnergyState::operator*=(double s) {
  displacement *= s;
  velocity *= s;
  return *this;
}

EnergyState operator+(EnergyState x, const EnergyState& y) { return x += y; }
EnergyState operator-(EnergyState x, const EnergyState& y) { return x -= y; }
EnergyState operator*(double s, EnergyState x) { return x *= s; }

Vec energy_gram_diagonal(const SpectralGrid& grid) {
  const int n = grid.mode_count();
  Vec g(2 * n);
  g << grid.eigenvalues(), Vec::Ones(n);
  return g;
}

namespace {

void check_dims(const SpectralGrid& grid, const EnergyState& x) {
  const auto n = grid.mode_count();
  if (x.displacement.size() != n || x.velocity.size() != n) {
    throw ValidationError("energy state has " + std::to_string(x.displacement.size()) + "/" +
                          std::to_string(x.velocity.size()) + " coefficients, grid has " +
                          std::to_string(n) + " modes");
  }
}

}  // namespace

double energy_inner(const SpectralGrid& grid, const EnergyState& x, const EnergyState& y) {
  check_dims(grid, x);
  check_dims(grid, y);
  return (grid.eigenvalues().array() * x.displacement.array() * y.displacement.array()).sum() +
         x.velocity.dot(y.velocity);
}

double energy_norm(const SpectralGrid& grid, const EnergyState& x) {
  return std::sqrt(energy_inner(grid, x, x));
}

EnergyState group_action(const SpectralGrid& grid, const EnergyState& state, double t) {
  check_dims(grid, state);
  const int n = grid.mode_count();
  EnergyState out = EnergyState::zero(n);
  for (int k = 0; k < n; ++k) {
    const double w = grid.frequencies()[k];
    const double c = std::cos(w * t);
    const double s = std::sin(w * t);
    const double a = state.displacement[k];
    const double b = state.velocity[k];
    out.displacement[k] = c * a + s / w * b;
    out.velocity[k] = -w * s * a + c * b;
  }
  return out;
}

Vec cubic(const SpectralGrid& grid, const Vec& displacement) {
  const Vec u = grid.to_physical(displacement);
  return grid.to_spectral(u.array().cube().matrix());
}

Vec linearized_cubic(const SpectralGrid& grid, const Vec& base, const Vec& dir) {
  const Vec u = grid.to_physical(base);
  const Vec z = grid.to_physical(dir);
  return grid.to_spectral((3.0 * u.array().square() * z.array()).matrix());
}

Vec second_linearized_cubic(const SpectralGrid& grid, const Vec& base, const Vec& p,
                            const Vec& q) {
  const Vec u = grid.to_physical(base);
  const Vec pp = grid.to_physical(p);
  const Vec qq = grid.to_physical(q);
  return grid.to_spectral((6.0 * u.array() * pp.array() * qq.array()).matrix());
}

double quartic_integral(const SpectralGrid& grid, const Vec& displacement) {
  const Vec u = grid.to_physical(displacement);
  return grid.integrate(u.array().square().square().matrix());
}

double hamiltonian(const SpectralGrid& grid, const EnergyState& state) {
  const double e = energy_norm(grid, state);
  return 0.5 * e * e + 0.25 * quartic_integral(grid, state.displacement);
}

MeasurementOp::MeasurementOp(const SpectralGrid& grid, Mat matrix) : matrix_(std::move(matrix)) {
  const int n = grid.mode_count();
  if (matrix_.cols() != 2 * n) {
    throw ValidationError("measurement matrix needs " + std::to_string(2 * n) + " columns, got " +
                          std::to_string(matrix_.cols()));
  }
  if (matrix_.rows() < 1) throw ValidationError("measurement matrix needs at least one row");
  if (!matrix_.allFinite()) throw ValidationError("measurement matrix has non-finite entries");
  const Vec g = energy_gram_diagonal(grid);
  gram_inverse_ = g.cwiseInverse();
  gram_sqrt_ = g.cwiseSqrt();
}

MeasurementOp MeasurementOp::low_modes(const SpectralGrid& grid, int m) {
  const int n = grid.mode_count();
  if (m < 1 || m > n) {
    throw ValidationError("low_modes output dimension must lie in [1, " + std::to_string(n) + "]");
  }
  Mat c = Mat::Zero(m, 2 * n);
  for (int j = 0; j < m; ++j) c(j, j) = 1.0;
  return {grid, std::move(c)};
}

MeasurementOp MeasurementOp::velocity_probe(const SpectralGrid& grid,
                                            const std::vector<double>& points) {
  const int n = grid.mode_count();
  if (points.empty()) throw ValidationError("velocity_probe needs at least one point");
  Mat c = Mat::Zero(static_cast<Eigen::Index>(points.size()), 2 * n);
  const double scale = std::sqrt(2.0 / grid.domain_length());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = points[i];
    if (!(x > 0.0 && x < grid.domain_length())) {
      throw ValidationError("velocity_probe point outside the open domain");
    }
    for (int k = 0; k < n; ++k) {
      c(static_cast<Eigen::Index>(i), n + k) = scale * std::sin((k + 1) * std::numbers::pi * x /
                                                                grid.domain_length());
    }
  }
  return {grid, std::move(c)};
}

Vec MeasurementOp::apply(const EnergyState& w) const {
  const auto n = w.displacement.size();
  return matrix_.leftCols(n) * w.displacement + matrix_.rightCols(n) * w.velocity;
}

EnergyState MeasurementOp::adjoint(const Vec& y) const {
  const Vec x = gram_inverse_.cwiseProduct(matrix_.transpose() * y);
  return EnergyState::from_stacked(x);
}

double MeasurementOp::operator_norm() const {
  // ||C|| over E equals the spectral norm of C G^{-1/2}.
  const Mat scaled = matrix_ * gram_sqrt_.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Mat> svd(scaled);
  return svd.singularValues()(0);
}

}  // namespace mortensen
