#pragma once

// Mortensen observer drivers in the shifted frame (w = w~ + w^):
//   w^' = A w^ - [0; (w~ + w^)^3 - w~^3] + alpha H(t)^{-1} C* (y - C w^),  w^(0) = 0,
// with H(t) the value-function Hessian (Riccati along the nominal, or the
// full Hessian at the current estimate). Also the pointwise minimizer of V,
// the Kalman-Bucy reference for the linear case, and comparison metrics.

#include <optional>
#include <string>
#include <vector>

#include "mortensen/lqr_riccati.hpp"
#include "mortensen/ocp.hpp"

namespace mortensen {

struct GainMode {
  enum class Kind { riccati_nominal, full_hessian };
  Kind kind = Kind::riccati_nominal;
  int refresh_every = 1;

  static GainMode riccati() { return {}; }
  static GainMode full_hessian(int refresh_every);
  std::string name() const;
};

struct ObserverConfig {
  const Model* model = nullptr;
  OcpOptions ocp;
  double margin_floor = 1e-8;
  // Nominal Riccati solution; computed on demand when null.
  const RiccatiSolution* riccati = nullptr;
  int residual_samples = 10;
  double fixed_point_tol = 1e-12;
  int fixed_point_max_iter = 200;
  double argmin_tol = 1e-9;
  int argmin_max_iter = 20;
  // Bound on ||y||_{Y_T} for the observer drivers.
  double trust_radius = 1.0;
};

struct ObserverRun {
  Trajectory shifted;
  Trajectory absolute;
  std::vector<double> gain_margins;
  double residual = 0.0;
  int iterations = 0;  // Picard iterations, or Hessian refreshes
};

// y is the relative output y_abs - C w~ on the full grid.
ObserverRun run_observer(const OutputSignal& y, const GainMode& gain, const ObserverConfig& cfg);

ObserverRun fixed_point_observer(const OutputSignal& y, const ObserverConfig& cfg);

struct ArgminResult {
  std::vector<int> indices;
  std::vector<EnergyState> minimizers;  // xi*(t)
  std::vector<EnergyState> absolute;    // w~(t) + xi*(t)
  std::vector<double> margins;
  std::vector<int> newton_iterations;
  std::vector<double> gradient_norms;
};

ArgminResult argmin_estimator(const OutputSignal& y, const std::vector<int>& sample_indices,
                              const ObserverConfig& cfg);

struct KalmanResult {
  Trajectory estimate;           // absolute
  std::vector<Mat> covariance;   // E-self-adjoint coefficient operators
};

// Linear case only. y_abs is the absolute output.
KalmanResult kalman_bucy(const OutputSignal& y_abs, const ObserverConfig& cfg);

// Absolute estimates at a set of grid indices, for comparisons.
struct Estimate {
  std::string name;
  std::vector<int> indices;
  std::vector<EnergyState> states;
  std::vector<double> margins;

  static Estimate from_trajectory(std::string name, const Trajectory& t,
                                  std::vector<double> margins = {});
  static Estimate from_argmin(std::string name, const ArgminResult& r);
};

struct Comparison {
  struct Errors {
    std::string name;
    std::vector<int> indices;
    std::vector<double> errors;
    double terminal_error = 0.0;
    double sup_error = 0.0;
    std::optional<double> min_margin;
  };
  struct Discrepancy {
    std::string first;
    std::string second;
    int common_samples = 0;
    double sup_discrepancy = 0.0;
  };
  std::vector<Errors> errors;
  std::vector<Discrepancy> discrepancies;
};

Comparison compare(const SpectralGrid& grid, const std::vector<Estimate>& estimates,
                   const Trajectory& truth);

}  // namespace mortensen
