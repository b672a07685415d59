#include "mortensen/harness/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>

#include "mortensen/errors.hpp"
#include "mortensen/harness/acceptance.hpp"
#include "mortensen/harness/config.hpp"
#include "mortensen/harness/io.hpp"
#include "mortensen/harness/metrics.hpp"
#include "mortensen/harness/simulate.hpp"

namespace mortensen::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out = "mortensen_out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool quiet = false;
};

ScenarioConfig resolve_config(const Common& c) {
  json j = config_to_json(c.config.empty() ? ScenarioConfig{} : load_config(c.config));
  for (const auto& o : c.overrides) apply_override(j, o);
  if (c.seed) j["seed"] = *c.seed;
  ScenarioConfig cfg = config_from_json(j);
  validate(cfg);
  return cfg;
}

class Context {
 public:
  Context(const Common& c, std::string command, std::ostream& out)
      : common_(c), command_(std::move(command)), out_(out), cfg_(resolve_config(c)) {
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec || !fs::is_directory(c.out)) throw ValidationError("--out: cannot create '" + c.out + "'");
    metrics_ = report_header(command_, cfg_);
  }

  const ScenarioConfig& cfg() const { return cfg_; }
  json& metrics() { return metrics_; }
  Timing& timing() { return timing_; }
  std::string path(const std::string& name) const { return (fs::path(common_.out) / name).string(); }

  void say(const std::string& line) {
    if (!common_.quiet) out_ << line << '\n';
  }

  void finish() {
    write_json(path("metrics.json"), metrics_);
    write_json(path("timing.json"), timing_.json());
    say("wrote " + path("metrics.json"));
  }

 private:
  const Common& common_;
  std::string command_;
  std::ostream& out_;
  ScenarioConfig cfg_;
  json metrics_;
  Timing timing_;
};

RiccatiSolution timed_riccati(Context& ctx, const Scenario& s) {
  ctx.timing().start("riccati");
  RiccatiSolution ric = riccati_nominal(s.model(), ctx.cfg().riccati_substeps);
  ctx.timing().stop();
  return ric;
}

std::vector<double> riccati_margins(const Scenario& s, const RiccatiSolution& ric) {
  std::vector<double> m;
  for (int k = 0; k <= s.time().steps(); ++k) m.push_back(coercivity_margin(s.grid(), ric.hessian_at(k)));
  return m;
}

Simulation timed_simulation(Context& ctx, const Scenario& s) {
  ctx.timing().start("simulate");
  Simulation sim = simulate(s);
  ctx.timing().stop();
  return sim;
}

int cmd_simulate(Context& ctx) {
  const Scenario s(ctx.cfg());
  const Simulation sim = timed_simulation(ctx, s);
  write_trajectory_csv(ctx.path("truth.csv"), sim.truth);
  write_trajectory_csv(ctx.path("nominal.csv"), s.model().nominal);
  write_signal_csv(ctx.path("y_abs.csv"), sim.y_abs, "y");
  write_signal_csv(ctx.path("y_rel.csv"), sim.y_rel, "y");
  ctx.metrics()["simulation"] = {
      {"v_norm", signal_norm(sim.disturbances.v)},
      {"eta_norm", energy_norm(s.grid(), sim.disturbances.eta)},
      {"mu_norm", signal_norm(sim.disturbances.mu)},
      {"y_rel_norm", signal_norm(sim.y_rel)},
      {"sup_truth_minus_nominal", sup_energy_distance(s.grid(), sim.truth, s.model().nominal)}};
  ctx.finish();
  return 0;
}

int cmd_observe(Context& ctx) {
  const Scenario s(ctx.cfg());
  const Simulation sim = timed_simulation(ctx, s);
  const RiccatiSolution ric = timed_riccati(ctx, s);
  ctx.timing().start("observer");
  const ObserverRun run = run_observer(sim.y_rel, ctx.cfg().gain, s.observer_config(&ric));
  ctx.timing().stop();
  write_trajectory_csv(ctx.path("truth.csv"), sim.truth);
  write_trajectory_csv(ctx.path("observer.csv"), run.absolute);
  write_trajectory_csv(ctx.path("observer_shifted.csv"), run.shifted);
  const Comparison cmp = compare(
      s.grid(), {Estimate::from_trajectory("run_observer", run.absolute, run.gain_margins)}, sim.truth);
  ctx.metrics()["gain"] = ctx.cfg().gain.name();
  ctx.metrics()["observer"] = run_json(s.grid(), run);
  ctx.metrics()["gain_margins"] = margins_json(s.time(), run.gain_margins);
  ctx.metrics()["comparison"] = comparison_json(cmp);
  ctx.say("terminal error " + format_double(cmp.errors.front().terminal_error));
  ctx.finish();
  return 0;
}

int cmd_estimate_argmin(Context& ctx) {
  const Scenario s(ctx.cfg());
  const Simulation sim = timed_simulation(ctx, s);
  const RiccatiSolution ric = timed_riccati(ctx, s);
  ctx.timing().start("argmin");
  const ArgminResult am =
      argmin_estimator(sim.y_rel, sample_indices(s.time(), ctx.cfg().argmin_samples),
                       s.observer_config(&ric));
  ctx.timing().stop();
  write_trajectory_csv(ctx.path("truth.csv"), sim.truth);
  write_samples_csv(ctx.path("argmin.csv"), s.time(), am.indices, am.absolute);
  const Comparison cmp = compare(s.grid(), {Estimate::from_argmin("argmin_estimator", am)}, sim.truth);
  ctx.metrics()["argmin"] = argmin_json(am);
  ctx.metrics()["comparison"] = comparison_json(cmp);
  ctx.finish();
  return 0;
}

int cmd_riccati(Context& ctx) {
  const Scenario s(ctx.cfg());
  const RiccatiSolution ric = timed_riccati(ctx, s);
  const std::vector<double> margins = riccati_margins(s, ric);
  ctx.timing().start("integral_residual");
  const double residual =
      riccati_integral_residual(s.model(), ric, sample_indices(s.time(), 4), ctx.cfg().riccati_substeps);
  ctx.timing().stop();
  {
    std::ofstream csv(ctx.path("riccati_margins.csv"), std::ios::binary);
    csv << "t,margin\n";
    for (std::size_t k = 0; k < margins.size(); ++k) {
      csv << format_double(s.time().time(static_cast<int>(k))) << ',' << format_double(margins[k]) << '\n';
    }
  }
  ctx.metrics()["margins"] = margins_json(s.time(), margins);
  ctx.metrics()["integral_residual"] = residual;
  ctx.finish();
  const double min_margin = *std::min_element(margins.begin(), margins.end());
  ctx.say("min coercivity margin " + format_double(min_margin) + ", integral residual " +
          format_double(residual));
  if (min_margin <= ctx.cfg().tolerances.margin_floor) {
    throw CoercivityLossError("Riccati operator along the nominal is not coercive", min_margin);
  }
  return 0;
}

int cmd_gradcheck(Context& ctx, int trials) {
  const Scenario s(ctx.cfg());
  ctx.timing().start("gradcheck");
  const auto results = gradient_check(s, trials, ctx.cfg().seed);
  ctx.timing().stop();
  json list = json::array();
  double worst = 0.0;
  for (const auto& t : results) {
    worst = std::max(worst, t.relative_error);
    list.push_back({{"horizon_index", t.horizon_index},
                    {"directional", t.directional},
                    {"finite_difference", t.finite_difference},
                    {"relative_error", t.relative_error}});
  }
  ctx.metrics()["trials"] = list;
  ctx.metrics()["max_relative_error"] = worst;
  ctx.say("max relative gradient error " + format_double(worst));
  ctx.finish();
  return 0;
}

int cmd_compare(Context& ctx) {
  const Scenario s(ctx.cfg());
  const Simulation sim = timed_simulation(ctx, s);
  const RiccatiSolution ric = timed_riccati(ctx, s);
  const ObserverConfig cfg = s.observer_config(&ric);
  std::vector<Estimate> estimates;

  ctx.timing().start("observer");
  const ObserverRun run = run_observer(sim.y_rel, ctx.cfg().gain, cfg);
  ctx.timing().stop();
  write_trajectory_csv(ctx.path("observer.csv"), run.absolute);
  estimates.push_back(Estimate::from_trajectory("run_observer", run.absolute, run.gain_margins));

  ctx.timing().start("fixed_point");
  const ObserverRun fp = fixed_point_observer(sim.y_rel, cfg);
  ctx.timing().stop();
  write_trajectory_csv(ctx.path("fixed_point.csv"), fp.absolute);
  estimates.push_back(Estimate::from_trajectory("fixed_point_observer", fp.absolute));

  ctx.timing().start("argmin");
  const ArgminResult am =
      argmin_estimator(sim.y_rel, sample_indices(s.time(), ctx.cfg().argmin_samples), cfg);
  ctx.timing().stop();
  write_samples_csv(ctx.path("argmin.csv"), s.time(), am.indices, am.absolute);
  estimates.push_back(Estimate::from_argmin("argmin_estimator", am));

  if (!ctx.cfg().cubic_on) {
    ctx.timing().start("kalman_bucy");
    const KalmanResult kb = kalman_bucy(sim.y_abs, cfg);
    ctx.timing().stop();
    write_trajectory_csv(ctx.path("kalman_bucy.csv"), kb.estimate);
    estimates.push_back(Estimate::from_trajectory("kalman_bucy", kb.estimate));
  }
  write_trajectory_csv(ctx.path("truth.csv"), sim.truth);

  const Comparison cmp = compare(s.grid(), estimates, sim.truth);
  ctx.metrics()["observer"] = run_json(s.grid(), run);
  ctx.metrics()["fixed_point"] = run_json(s.grid(), fp);
  ctx.metrics()["argmin"] = argmin_json(am);
  ctx.metrics()["comparison"] = comparison_json(cmp);
  for (const auto& d : cmp.discrepancies) {
    ctx.say(d.first + " vs " + d.second + ": " + format_double(d.sup_discrepancy));
  }
  ctx.finish();
  return 0;
}

int cmd_verify(Context& ctx, const std::vector<int>& only, std::ostream& out) {
  AcceptanceOptions opts;
  opts.base = ctx.cfg();
  opts.only = only;
  opts.scratch_dir = ctx.path("verify_scratch");
  json list = json::array();
  bool all = true;
  ctx.timing().start("verify");
  run_acceptance(opts, [&](const CriterionResult& r) {
    out << format_result(r) << '\n' << std::flush;
    all = all && r.passed;
    list.push_back({{"id", r.id}, {"title", r.title}, {"passed", r.passed}, {"summary", r.summary},
                    {"data", r.data}});
  });
  ctx.timing().stop();
  ctx.metrics()["criteria"] = list;
  ctx.metrics()["all_passed"] = all;
  ctx.finish();
  return all ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mortensen observer for the disturbed cubic wave equation"};
  app.require_subcommand(1);
  Common common;
  int trials = 5;
  std::vector<int> only;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "scenario JSON file")->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory")->capture_default_str();
    sub->add_option("--seed", common.seed, "override the scenario seed");
    sub->add_option("--override", common.overrides, "key.path=value (repeatable)");
    sub->add_flag("--quiet", common.quiet, "suppress progress output");
    return sub;
  };
  auto* simulate_cmd = add_common(app.add_subcommand("simulate", "truth trajectory and outputs"));
  auto* observe_cmd = add_common(app.add_subcommand("observe", "integrate the observer equation"));
  auto* argmin_cmd = add_common(app.add_subcommand("estimate-argmin", "pointwise minimizer of V"));
  auto* riccati_cmd = add_common(app.add_subcommand("riccati", "Riccati operator along the nominal"));
  auto* grad_cmd = add_common(app.add_subcommand("gradcheck", "adjoint gradient vs finite differences"));
  grad_cmd->add_option("--trials", trials, "number of random cases")->check(CLI::PositiveNumber);
  auto* verify_cmd = add_common(app.add_subcommand("verify", "acceptance criteria"));
  verify_cmd->add_option("--only", only, "criterion ids to run");
  auto* compare_cmd = add_common(app.add_subcommand("compare", "all estimators against the truth"));

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify_cmd) {
      Context ctx(common, "verify", out);
      return cmd_verify(ctx, only, out);
    }
    const std::pair<CLI::App*, std::string> table[] = {
        {simulate_cmd, "simulate"}, {observe_cmd, "observe"}, {argmin_cmd, "estimate-argmin"},
        {riccati_cmd, "riccati"},   {grad_cmd, "gradcheck"}, {compare_cmd, "compare"}};
    for (const auto& [sub, name] : table) {
      if (!*sub) continue;
      Context ctx(common, name, out);
      if (name == "simulate") return cmd_simulate(ctx);
      if (name == "observe") return cmd_observe(ctx);
      if (name == "estimate-argmin") return cmd_estimate_argmin(ctx);
      if (name == "riccati") return cmd_riccati(ctx);
      if (name == "gradcheck") return cmd_gradcheck(ctx, trials);
      return cmd_compare(ctx);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  return 2;
}

}  // namespace mortensen::harness
