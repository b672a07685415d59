#include "mortensen/harness/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <random>
#include <sstream>

#include <unistd.h>

#include "mortensen/errors.hpp"
#include "mortensen/harness/commands.hpp"
#include "mortensen/harness/io.hpp"
#include "mortensen/harness/metrics.hpp"

namespace mortensen::harness {

using nlohmann::json;

namespace {

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

EnergyState random_state(std::mt19937_64& rng, const SpectralGrid& grid, double amplitude,
                         int modes) {
  std::normal_distribution<double> normal;
  EnergyState x = EnergyState::zero(grid.mode_count());
  modes = std::min(modes, grid.mode_count());
  for (int j = 0; j < modes; ++j) {
    x.displacement[j] = normal(rng) / grid.frequencies()[j];
    x.velocity[j] = normal(rng);
  }
  return (amplitude / energy_norm(grid, x)) * x;
}

// Sum of three random sinusoids per channel, scaled to the given L^2 norm.
template <class S>
S random_smooth(std::mt19937_64& rng, const TimeGrid& time, int dim, int active, double amplitude) {
  std::uniform_real_distribution<double> freq(0.5, 8.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> normal;
  S s;
  s.grid = time;
  s.values.assign(static_cast<std::size_t>(time.size()), Vec::Zero(dim));
  for (int j = 0; j < std::min(dim, active); ++j) {
    for (int r = 0; r < 3; ++r) {
      const double f = freq(rng), p = phase(rng), c = normal(rng) / (j + 1);
      for (int k = 0; k < time.size(); ++k) s.values[k][j] += c * std::sin(f * time.time(k) + p);
    }
  }
  const double norm = signal_norm(s);
  if (norm > 0.0) {
    for (auto& v : s.values) v *= amplitude / norm;
  }
  return s;
}

struct Check {
  bool ok = true;
  std::vector<std::string> notes;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back("FAILED " + what);
    }
  }
};

ScenarioConfig with(ScenarioConfig c, bool cubic_on) {
  c.cubic_on = cubic_on;
  return c;
}

ScenarioConfig disturbed(ScenarioConfig c, std::uint64_t seed, double v, double eta, double mu) {
  c.seed = seed;
  c.disturbance.v_kind = v > 0.0 ? "smooth_random" : "zero";
  c.disturbance.v_amplitude = v;
  c.disturbance.eta_kind = eta > 0.0 ? "random" : "zero";
  c.disturbance.eta_amplitude = eta;
  c.disturbance.mu_kind = mu > 0.0 ? "random" : "zero";
  c.disturbance.mu_amplitude = mu;
  return c;
}

// ---------------------------------------------------------------------------

CriterionResult unitary_group(const AcceptanceOptions& o) {
  CriterionResult r{1, "unitary group", false, "", 0, 1.0, {}};
  const SpectralGrid grid(o.base.mode_count, o.base.domain_length, o.base.dealias_factor);
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> times(-10.0, 10.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const EnergyState w = random_state(rng, grid, 1.0, grid.mode_count());
    const double t = times(rng);
    const double before = energy_norm(grid, w);
    worst = std::max(worst, std::abs(energy_norm(grid, group_action(grid, w, t)) - before) / before);
  }
  r.passed = worst <= 1e-13;
  r.summary = "max relative norm change " + sci(worst) + " (tol 1e-13, 100 states, |t| <= 10)";
  r.data = {{"max_relative_change", worst}};
  return r;
}

CriterionResult energy_conservation(const AcceptanceOptions& o) {
  CriterionResult r{2, "nonlinear energy conservation", false, "", 0, 5.0, {}};
  ScenarioConfig c = with(o.base, true);
  c.t_final = 2.0;
  const Scenario s(c);
  const Trajectory& w = s.model().nominal;
  const double h0 = hamiltonian(s.grid(), w.at(0));
  double drift = 0.0;
  for (const auto& x : w.states) drift = std::max(drift, std::abs(hamiltonian(s.grid(), x) - h0) / h0);
  r.passed = drift < 1e-6;
  r.summary = "max relative Hamiltonian drift " + sci(drift) + " on [0, 2] (tol 1e-6)";
  r.data = {{"max_relative_drift", drift}, {"initial_hamiltonian", h0}};
  return r;
}

CriterionResult adjoint_gradient_check(const AcceptanceOptions& o) {
  CriterionResult r{3, "adjoint gradient", false, "", 0, 30.0, {}};
  const Scenario s(with(o.base, true));
  const auto trials = gradient_check(s, 5, 303);
  double worst = 0.0;
  json list = json::array();
  for (const auto& t : trials) {
    worst = std::max(worst, t.relative_error);
    list.push_back({{"horizon_index", t.horizon_index},
                    {"directional", t.directional},
                    {"finite_difference", t.finite_difference},
                    {"relative_error", t.relative_error}});
  }
  r.passed = worst <= 1e-5;
  r.summary = "max relative error " + sci(worst) + " over 5 random (xi, y, v) (tol 1e-5)";
  r.data = {{"trials", list}, {"max_relative_error", worst}};
  return r;
}

CriterionResult optimality_condition(const AcceptanceOptions& o) {
  CriterionResult r{4, "optimality condition", false, "", 0, 60.0, {}};
  const Scenario s(with(o.base, true));
  const Model& m = s.model();
  OcpOptions opts = s.ocp_options();
  opts.tol = std::min(opts.tol, 1e-9);
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> horizon(m.time().steps() / 4, m.time().steps());
  double worst = 0.0;
  json list = json::array();
  for (int i = 0; i < 5; ++i) {
    const int n = horizon(rng);
    const EnergyState xi = random_state(rng, m.grid, 0.05, 4);
    const auto y = random_smooth<OutputSignal>(rng, m.time(), m.measurement.output_dim(), 4, 0.05);
    const OcpData data = make_ocp_data(m, n, xi, y);
    const OcpSolution sol = solve_ocp(data, opts);
    // Recompute the adjoint state independently of the solver's bookkeeping.
    const GradientResult g = adjoint_gradient(sol.v_star, data);
    ControlSignal sum = sol.v_star;
    for (std::size_t k = 0; k < sum.values.size(); ++k) sum.values[k] += g.p.values[k];
    const double defect = signal_norm(sum);
    worst = std::max(worst, defect);
    list.push_back({{"horizon_index", n}, {"iterations", sol.iterations}, {"value", sol.value},
                    {"v_plus_p", defect}});
  }
  r.passed = worst <= 1e-8;
  r.summary = "max ||v* + p*|| = " + sci(worst) + " over 5 solves (tol 1e-8)";
  r.data = {{"solves", list}, {"max_defect", worst}};
  return r;
}

CriterionResult hessian_duality(const AcceptanceOptions& o) {
  CriterionResult r{5, "Hessian duality with Riccati", false, "", 0, 120.0, {}};
  const Scenario s(with(o.base, true));
  const Model& m = s.model();
  const RiccatiSolution ric = riccati_nominal(m, o.base.riccati_substeps);
  const int steps = m.time().steps();
  std::mt19937_64 rng(505);
  double worst = 0.0;
  json list = json::array();
  for (const int n : {steps / 4, steps / 2, 3 * steps / 4}) {
    const OcpData data = make_ocp_data(m, n, EnergyState::zero(m.mode_count()),
                                       OutputSignal::zero(m.time(), m.measurement.output_dim()));
    const HessianOperator h = value_hessian(data, s.ocp_options());
    double local = 0.0;
    for (int i = 0; i < 5; ++i) {
      const EnergyState eta = random_state(rng, m.grid, 1.0, m.mode_count());
      const EnergyState a = h.apply(eta);
      const EnergyState b = EnergyState::from_stacked(ric.hessian_at(n) * eta.stacked());
      local = std::max(local, energy_norm(m.grid, a - b) / energy_norm(m.grid, a));
    }
    worst = std::max(worst, local);
    list.push_back({{"t", m.time().time(n)}, {"max_relative_error", local},
                    {"hessian_margin", h.coercivity_margin}});
  }
  r.passed = worst <= 1e-4;
  r.summary = "max relative error " + sci(worst) + " at t = T/4, T/2, 3T/4, 5 directions (tol 1e-4)";
  r.data = {{"times", list}, {"max_relative_error", worst}};
  return r;
}

CriterionResult coercivity_nominal(const AcceptanceOptions& o) {
  CriterionResult r{6, "coercivity along the nominal", false, "", 0, 60.0, {}};
  const Scenario s(with(o.base, true));
  const Model& m = s.model();
  const RiccatiSolution ric = riccati_nominal(m, o.base.riccati_substeps);
  double margin = 1e300;
  double at = 0.0;
  for (int k = 0; k <= m.time().steps(); ++k) {
    const double mk = coercivity_margin(m.grid, ric.hessian_at(k));
    if (mk < margin) {
      margin = mk;
      at = m.time().time(k);
    }
  }
  const int steps = m.time().steps();
  const double residual = riccati_integral_residual(m, ric, {steps / 4, steps / 2, 3 * steps / 4},
                                                    o.base.riccati_substeps);
  r.passed = margin > 0.0 && residual <= 1e-6;
  r.summary = "min margin of P(t) = " + sci(margin) + " at t = " + sci(at) +
              "; integral-form residual " + sci(residual) + " (tol 1e-6)";
  r.data = {{"min_margin", margin}, {"argmin_time", at}, {"integral_residual", residual}};
  return r;
}

CriterionResult linear_equivalence(const AcceptanceOptions& o) {
  CriterionResult r{7, "linear-case equivalence", false, "", 0, 120.0, {}};
  double worst = 0.0;
  json list = json::array();
  for (const std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
    const Scenario s(disturbed(with(o.base, false), seed, 0.05, 0.05, 0.01));
    const Model& m = s.model();
    const Simulation sim = simulate(s);
    const RiccatiSolution ric = riccati_nominal(m, o.base.riccati_substeps);
    ObserverConfig cfg = s.observer_config(&ric);
    cfg.ocp.tol = std::min(cfg.ocp.tol, 1e-11);
    const ObserverRun run = run_observer(sim.y_rel, GainMode::riccati(), cfg);
    const ObserverRun fp = fixed_point_observer(sim.y_rel, cfg);
    const ArgminResult am = argmin_estimator(sim.y_rel, sample_indices(m.time(), 5), cfg);
    const KalmanResult kb = kalman_bucy(sim.y_abs, cfg);
    const Comparison cmp = compare(m.grid,
                                   {Estimate::from_trajectory("run_observer", run.absolute),
                                    Estimate::from_trajectory("fixed_point_observer", fp.absolute),
                                    Estimate::from_argmin("argmin_estimator", am),
                                    Estimate::from_trajectory("kalman_bucy", kb.estimate)},
                                   sim.truth);
    double local = 0.0;
    for (const auto& d : cmp.discrepancies) local = std::max(local, d.sup_discrepancy);
    worst = std::max(worst, local);
    list.push_back({{"seed", seed}, {"max_pairwise", local}, {"comparison", comparison_json(cmp)}});
  }
  r.passed = worst <= 1e-5;
  r.summary = "max pairwise sup discrepancy " + sci(worst) + " over 3 scenarios, 4 estimators (tol 1e-5)";
  r.data = {{"scenarios", list}, {"max_pairwise", worst}};
  return r;
}

CriterionResult zero_data(const AcceptanceOptions& o) {
  CriterionResult r{8, "zero-data fixed points", false, "", 0, 30.0, {}};
  Check check;
  json data;
  const double tol = 1e-8;
  for (const bool cubic : {true, false}) {
    const Scenario s(with(o.base, cubic));
    const Model& m = s.model();
    const int steps = m.time().steps();
    const OutputSignal y0 = OutputSignal::zero(m.time(), m.measurement.output_dim());
    const EnergyState xi0 = EnergyState::zero(m.mode_count());
    const std::string tag = cubic ? "cubic" : "linear";

    double v_max = 0.0, g_max = 0.0;
    for (const int n : sample_indices(m.time(), 4)) {
      const OcpData data = make_ocp_data(m, n, xi0, y0);
      const OcpSolution sol = solve_ocp(data, s.ocp_options());
      v_max = std::max(v_max, std::abs(sol.value));
      g_max = std::max(g_max, energy_norm(m.grid, value_gradient(data, s.ocp_options(), &sol)));
    }
    check.require(v_max <= tol, tag + " V");
    check.require(g_max <= tol, tag + " D_xi V");

    const RiccatiSolution ric = riccati_nominal(m, o.base.riccati_substeps);
    const ObserverConfig cfg = s.observer_config(&ric);
    auto sup_shift = [&](const ObserverRun& run) {
      double d = 0.0;
      for (const auto& x : run.shifted.states) d = std::max(d, energy_norm(m.grid, x));
      return d;
    };
    const double obs = sup_shift(run_observer(y0, GainMode::riccati(), cfg));
    const double fp = sup_shift(fixed_point_observer(y0, cfg));
    const double full = sup_shift(run_observer(y0, GainMode::full_hessian(steps / 4), cfg));
    const ArgminResult am = argmin_estimator(y0, sample_indices(m.time(), 2), cfg);
    double xi_max = 0.0;
    for (const auto& x : am.minimizers) xi_max = std::max(xi_max, energy_norm(m.grid, x));
    check.require(obs <= tol, tag + " run_observer(riccati_nominal)");
    check.require(fp <= tol, tag + " fixed_point_observer");
    check.require(full <= tol, tag + " run_observer(full_hessian)");
    check.require(xi_max <= tol, tag + " argmin_estimator");
    json part = {{"max_value", v_max}, {"max_gradient", g_max}, {"observer_riccati", obs},
                 {"observer_full_hessian", full}, {"fixed_point", fp}, {"argmin", xi_max}};
    if (!cubic) {
      OutputSignal y_abs = y0;
      for (int k = 0; k <= steps; ++k) y_abs.values[k] = m.measurement.apply(m.nominal.at(k));
      const double kb = sup_energy_distance(m.grid, kalman_bucy(y_abs, cfg).estimate, m.nominal);
      check.require(kb <= tol, "kalman_bucy (" + sci(kb) + ")");
      part["kalman_bucy"] = kb;
    }
    data[tag] = part;
  }
  r.passed = check.ok;
  std::ostringstream msg;
  msg << "V, D_xi V, observer (both gains), fixed point, argmin, Kalman all within 1e-8 of zero";
  for (const auto& n : check.notes) msg << "; " << n;
  r.summary = msg.str();
  r.data = data;
  return r;
}

CriterionResult time_zero(const AcceptanceOptions& o) {
  CriterionResult r{9, "t = 0 closed form", false, "", 0, 1.0, {}};
  const Scenario s(with(o.base, true));
  const Model& m = s.model();
  std::mt19937_64 rng(909);
  double v_err = 0.0, g_err = 0.0, h_err = 0.0;
  for (int i = 0; i < 3; ++i) {
    const EnergyState xi = random_state(rng, m.grid, 0.1, m.mode_count());
    const auto y = random_smooth<OutputSignal>(rng, m.time(), m.measurement.output_dim(), 4, 0.1);
    const OcpData data = make_ocp_data(m, 0, xi, y);
    const OcpSolution sol = solve_ocp(data, s.ocp_options());
    const double e = energy_norm(m.grid, xi);
    v_err = std::max(v_err, std::abs(sol.value - 0.5 * e * e));
    g_err = std::max(g_err, energy_norm(m.grid, value_gradient(data, s.ocp_options(), &sol) - xi));
    const HessianOperator h = value_hessian(data, s.ocp_options(), &sol);
    h_err = std::max(h_err, (h.matrix - Mat::Identity(h.matrix.rows(), h.matrix.cols())).norm());
  }
  r.passed = v_err <= 1e-10 && g_err <= 1e-10 && h_err <= 1e-10;
  r.summary = "|V - |xi|^2/2| = " + sci(v_err) + ", |grad - xi| = " + sci(g_err) +
              ", |H - I| = " + sci(h_err) + " (tol 1e-10)";
  r.data = {{"value_error", v_err}, {"gradient_error", g_err}, {"hessian_error", h_err}};
  return r;
}

CriterionResult discrepancy_study(const AcceptanceOptions& o) {
  CriterionResult r{10, "observer vs argmin discrepancy study", false, "", 0, 300.0, {}};
  const Scenario s(disturbed(with(o.base, true), 21, 0.05, 0.05, 0.005));
  const Model& m = s.model();
  const Simulation sim = simulate(s);
  const RiccatiSolution ric = riccati_nominal(m, o.base.riccati_substeps);
  ObserverConfig cfg = s.observer_config(&ric);
  cfg.ocp.tol = std::min(cfg.ocp.tol, 1e-11);
  const std::vector<int> samples = sample_indices(m.time(), 4);

  std::vector<double> scales{1.0, 0.5, 0.25};
  std::vector<double> disc;
  json list = json::array();
  for (const double sc : scales) {
    const OutputSignal y = scaled(sim.y_rel, sc);
    const ObserverRun run = run_observer(y, GainMode::riccati(), cfg);
    const ArgminResult am = argmin_estimator(y, samples, cfg);
    double d = 0.0;
    for (std::size_t i = 0; i < am.indices.size(); ++i) {
      d = std::max(d, energy_norm(m.grid, am.absolute[i] - run.absolute.at(am.indices[i])));
    }
    disc.push_back(d);
    list.push_back({{"scale", sc}, {"y_norm", signal_norm(y)}, {"sup_discrepancy", d}});
  }
  double min_order = 1e300;
  json orders = json::array();
  for (std::size_t i = 0; i + 1 < disc.size(); ++i) {
    const double order = std::log2(disc[i] / disc[i + 1]);
    orders.push_back(order);
    min_order = std::min(min_order, order);
  }
  r.passed = min_order >= 1.0;
  std::ostringstream msg;
  msg << "discrepancy " << sci(disc[0]) << " -> " << sci(disc[1]) << " -> " << sci(disc[2])
      << " under y-halving, min empirical order " << sci(min_order) << " (need >= 1)";
  r.summary = msg.str();
  r.data = {{"sweep", list}, {"orders", orders}, {"min_order", min_order}};
  return r;
}

CriterionResult hjb_diagnostic(const AcceptanceOptions& o) {
  CriterionResult r{11, "HJB residual diagnostic", false, "", 0, 120.0, {}};
  std::vector<double> dts{2.0 * o.base.dt, o.base.dt};
  std::vector<double> residuals;
  for (const double dt : dts) {
    ScenarioConfig c = with(o.base, false);
    c.dt = dt;
    const Scenario s(c);
    const Model& m = s.model();
    // Same continuous data on every grid.
    OutputSignal y_abs = OutputSignal::zero(m.time(), m.measurement.output_dim());
    for (int k = 0; k < m.time().size(); ++k) {
      y_abs.values[k] = m.measurement.apply(m.nominal.at(k));
      for (Eigen::Index j = 0; j < y_abs.values[k].size(); ++j) {
        y_abs.values[k][j] += 0.02 * std::sin((j + 1) * 3.0 * m.time().time(k) + j);
      }
    }
    const int n = m.time().steps() / 2;
    EnergyState xi = m.nominal.at(n);
    xi.displacement[0] += 0.01;
    xi.velocity[std::min<Eigen::Index>(1, xi.velocity.size() - 1)] -= 0.01;
    OcpOptions opts = s.ocp_options();
    opts.tol = std::min(opts.tol, 1e-11);
    residuals.push_back(hjb_residual(m, n, xi, y_abs, 1, opts));
  }
  const double order = std::log2(residuals[0] / residuals[1]);
  r.passed = residuals[1] <= 1e-3 && order >= 1.0;
  r.summary = "residual " + sci(residuals[1]) + " at dt = " + sci(dts[1]) + " (tol 1e-3), order " +
              sci(order) + " under dt-halving (need >= 1)";
  r.data = {{"dt", dts}, {"residuals", residuals}, {"order", order}};
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CriterionResult determinism_io(const AcceptanceOptions& o) {
  CriterionResult r{12, "determinism and I/O", false, "", 0, 30.0, {}};
  namespace fs = std::filesystem;
  const fs::path root = o.scratch_dir.empty()
                            ? fs::temp_directory_path() / ("mortensen_acceptance_" +
                                                           std::to_string(::getpid()))
                            : fs::path(o.scratch_dir);
  fs::create_directories(root);
  const ScenarioConfig c = disturbed(o.base, 77, 0.05, 0.05, 0.01);
  const fs::path cfg_path = root / "config.json";
  write_json(cfg_path.string(), config_to_json(c));

  Check check;
  std::ostringstream sink;
  for (const std::string command : {"simulate", "observe"}) {
    for (const std::string run : {"a", "b"}) {
      const int code = run_cli({"mortensen", command, "--config", cfg_path.string(), "--out",
                                (root / command / run).string(), "--quiet"},
                               sink, sink);
      check.require(code == 0, command + " exit code " + std::to_string(code));
    }
    int files = 0;
    for (const auto& entry : fs::directory_iterator(root / command / "a")) {
      const auto name = entry.path().filename();
      if (name == "timing.json") continue;
      ++files;
      check.require(slurp(entry.path()) == slurp(root / command / "b" / name),
                    command + "/" + name.string() + " differs between runs");
    }
    check.require(files > 0, command + " produced no files");
  }

  // CSV round trip against the in-memory trajectory.
  const Scenario s(c);
  const Simulation sim = simulate(s);
  const Trajectory back = read_trajectory_csv((root / "simulate" / "a" / "truth.csv").string());
  bool exact = back.grid == sim.truth.grid && back.states.size() == sim.truth.states.size();
  for (std::size_t k = 0; exact && k < back.states.size(); ++k) {
    exact = back.states[k].displacement == sim.truth.states[k].displacement &&
            back.states[k].velocity == sim.truth.states[k].velocity;
  }
  check.require(exact, "truth.csv round trip is not bit-exact");
  fs::remove_all(root);

  r.passed = check.ok;
  std::ostringstream msg;
  msg << "simulate and observe byte-identical across runs; CSV round trip bit-exact";
  for (const auto& n : check.notes) msg << "; " << n;
  r.summary = msg.str();
  r.data = {{"notes", check.notes}};
  return r;
}

using Runner = CriterionResult (*)(const AcceptanceOptions&);
constexpr Runner kRunners[] = {unitary_group,     energy_conservation, adjoint_gradient_check,
                               optimality_condition, hessian_duality, coercivity_nominal,
                               linear_equivalence, zero_data,         time_zero,
                               discrepancy_study, hjb_diagnostic,     determinism_io};

}  // namespace

std::vector<GradientTrial> gradient_check(const Scenario& s, int trials, std::uint64_t seed,
                                          double eps) {
  const Model& m = s.model();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> horizon(std::max(1, m.time().steps() / 4), m.time().steps());
  const double radius = s.config().trust_radius;
  std::vector<GradientTrial> out;
  for (int i = 0; i < trials; ++i) {
    GradientTrial t;
    t.horizon_index = m.time().steps() == 0 ? 0 : horizon(rng);
    const EnergyState xi = random_state(rng, m.grid, 0.05 * radius, 4);
    const auto y = random_smooth<OutputSignal>(rng, m.time(), m.measurement.output_dim(), 4,
                                               0.05 * radius);
    const OcpData data = make_ocp_data(m, t.horizon_index, xi, y);
    const auto v = random_smooth<ControlSignal>(rng, data.time(), m.mode_count(), 4, 0.1 * radius);
    const auto h = random_smooth<ControlSignal>(rng, data.time(), m.mode_count(), m.mode_count(), 1.0);
    const GradientResult g = adjoint_gradient(v, data);
    auto reduced = [&](double e) {
      ControlSignal ve = v;
      for (std::size_t k = 0; k < ve.values.size(); ++k) ve.values[k] += e * h.values[k];
      return cost(state_of(data, ve), ve, data);
    };
    t.directional = signal_inner(g.grad, h);
    t.finite_difference = (reduced(eps) - reduced(-eps)) / (2.0 * eps);
    t.relative_error = std::abs(t.directional - t.finite_difference) / std::abs(t.directional);
    out.push_back(t);
  }
  return out;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  validate(options.base);
  std::vector<CriterionResult> results;
  for (std::size_t i = 0; i < std::size(kRunners); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), id) == options.only.end()) {
      continue;
    }
    const auto begin = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = kRunners[i](options);
    } catch (const std::exception& e) {
      r.id = id;
      r.title = "criterion " + std::to_string(id);
      r.passed = false;
      r.summary = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
    if (r.time_limit > 0.0 && r.seconds >= r.time_limit) {
      r.passed = false;
      r.summary += "; runtime " + sci(r.seconds) + " s exceeds limit " + sci(r.time_limit) + " s";
    }
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream out;
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.2f", r.seconds);
  out << (r.passed ? "[PASS] " : "[FAIL] ") << std::setw(2) << r.id << ' ' << r.title << ": "
      << r.summary << " [" << secs << " s]";
  return out.str();
}

}  // namespace mortensen::harness
