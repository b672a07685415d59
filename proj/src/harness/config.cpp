#include "mortensen/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mortensen/errors.hpp"

namespace mortensen::harness {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ValidationError(path + ": " + msg);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path.empty() ? "config" : path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path, const std::set<std::string>& known) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) fail(join(path, key), "unknown key");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  const auto x = j.get<std::int64_t>();
  if (x < -2147483647 || x > 2147483647) fail(path, "integer out of range");
  return static_cast<int>(x);
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> get_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

template <class F>
void optional_field(const json& j, const std::string& path, const char* key, F&& read) {
  if (j.contains(key)) read(j.at(key), join(path, key));
}

void read_measurement(const json& j, const std::string& path, MeasurementSpec& m) {
  require_object(j, path);
  reject_unknown(j, path, {"kind", "m", "points", "matrix"});
  if (!j.contains("kind")) fail(join(path, "kind"), "missing");
  m.kind = get_string(j.at("kind"), join(path, "kind"));
  if (m.kind == "low_modes") {
    optional_field(j, path, "m", [&](const json& x, const std::string& p) { m.m = get_int(x, p); });
  } else if (m.kind == "velocity_probe") {
    if (!j.contains("points")) fail(join(path, "points"), "missing");
    m.points = get_numbers(j.at("points"), join(path, "points"));
  } else if (m.kind == "custom") {
    if (!j.contains("matrix")) fail(join(path, "matrix"), "missing");
    const json& rows = j.at("matrix");
    const std::string mp = join(path, "matrix");
    if (!rows.is_array()) fail(mp, "expected an array of rows");
    m.matrix.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      m.matrix.push_back(get_numbers(rows[i], mp + "[" + std::to_string(i) + "]"));
    }
  } else {
    fail(join(path, "kind"), "must be low_modes, velocity_probe or custom");
  }
}

void read_disturbance(const json& j, const std::string& path, DisturbanceSpec& d) {
  require_object(j, path);
  reject_unknown(j, path, {"v", "eta", "mu"});
  auto read_part = [&](const char* key, const std::set<std::string>& kinds,
                       const std::set<std::string>& fields, std::string& kind, double& amplitude,
                       double* correlation) {
    if (!j.contains(key)) return;
    const std::string p = join(path, key);
    const json& x = j.at(key);
    require_object(x, p);
    reject_unknown(x, p, fields);
    if (!x.contains("kind")) fail(join(p, "kind"), "missing");
    kind = get_string(x.at("kind"), join(p, "kind"));
    if (!kinds.count(kind)) fail(join(p, "kind"), "unsupported disturbance kind '" + kind + "'");
    optional_field(x, p, "amplitude",
                   [&](const json& v, const std::string& q) { amplitude = get_number(v, q); });
    if (correlation) {
      optional_field(x, p, "correlation_time",
                     [&](const json& v, const std::string& q) { *correlation = get_number(v, q); });
    }
  };
  read_part("v", {"zero", "smooth_random"}, {"kind", "amplitude", "correlation_time"}, d.v_kind,
            d.v_amplitude, &d.v_correlation_time);
  read_part("eta", {"zero", "random"}, {"kind", "amplitude"}, d.eta_kind, d.eta_amplitude, nullptr);
  read_part("mu", {"zero", "random"}, {"kind", "amplitude"}, d.mu_kind, d.mu_amplitude, nullptr);
}

void read_tolerances(const json& j, const std::string& path, Tolerances& t) {
  require_object(j, path);
  reject_unknown(j, path,
                 {"ocp", "ocp_max_iter", "cg", "cg_max_iter", "argmin", "argmin_max_iter",
                  "fixed_point", "fixed_point_max_iter", "margin_floor"});
  auto num = [&](const char* key, double& out) {
    optional_field(j, path, key, [&](const json& x, const std::string& p) { out = get_number(x, p); });
  };
  auto integer = [&](const char* key, int& out) {
    optional_field(j, path, key, [&](const json& x, const std::string& p) { out = get_int(x, p); });
  };
  num("ocp", t.ocp);
  integer("ocp_max_iter", t.ocp_max_iter);
  num("cg", t.cg);
  integer("cg_max_iter", t.cg_max_iter);
  num("argmin", t.argmin);
  integer("argmin_max_iter", t.argmin_max_iter);
  num("fixed_point", t.fixed_point);
  integer("fixed_point_max_iter", t.fixed_point_max_iter);
  num("margin_floor", t.margin_floor);
}

void read_gain(const json& j, const std::string& path, GainMode& g) {
  require_object(j, path);
  reject_unknown(j, path, {"kind", "refresh_every"});
  if (!j.contains("kind")) fail(join(path, "kind"), "missing");
  const std::string kind = get_string(j.at("kind"), join(path, "kind"));
  if (kind == "riccati_nominal") {
    if (j.contains("refresh_every")) fail(join(path, "refresh_every"), "only valid for full_hessian");
    g = GainMode::riccati();
  } else if (kind == "full_hessian") {
    g.kind = GainMode::Kind::full_hessian;
    g.refresh_every = 1;
    optional_field(j, path, "refresh_every",
                   [&](const json& x, const std::string& p) { g.refresh_every = get_int(x, p); });
  } else {
    fail(join(path, "kind"), "must be riccati_nominal or full_hessian");
  }
}

}  // namespace

void validate(const ScenarioConfig& c) {
  if (c.mode_count < 1) fail("mode_count", "must be positive");
  if (!(c.domain_length > 0.0)) fail("domain_length", "must be positive");
  if (!(c.dealias_factor >= 1.0)) fail("dealias_factor", "must be >= 1");
  if (c.cubic_on && c.dealias_factor < 1.5) {
    fail("dealias_factor", "must be >= 1.5 when cubic_on is true");
  }
  if (!(c.t_final > 0.0)) fail("t_final", "must be positive");
  if (!(c.dt > 0.0)) fail("dt", "must be positive");
  const double ratio = c.t_final / c.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    fail("dt", "must divide t_final");
  }
  if (!(c.alpha > 0.0)) fail("alpha", "must be positive");
  if (static_cast<int>(c.initial_displacement.size()) > c.mode_count) {
    fail("initial_state.displacement", "has more entries than mode_count");
  }
  if (static_cast<int>(c.initial_velocity.size()) > c.mode_count) {
    fail("initial_state.velocity", "has more entries than mode_count");
  }
  const auto& m = c.measurement;
  if (m.kind == "low_modes") {
    if (m.m < 1 || m.m > c.mode_count) fail("measurement.m", "must lie in [1, mode_count]");
  } else if (m.kind == "velocity_probe") {
    if (m.points.empty()) fail("measurement.points", "must not be empty");
    for (std::size_t i = 0; i < m.points.size(); ++i) {
      if (!(m.points[i] > 0.0 && m.points[i] < c.domain_length)) {
        fail("measurement.points[" + std::to_string(i) + "]", "must lie inside (0, domain_length)");
      }
    }
  } else if (m.kind == "custom") {
    if (m.matrix.empty()) fail("measurement.matrix", "must have at least one row");
    for (std::size_t i = 0; i < m.matrix.size(); ++i) {
      if (static_cast<int>(m.matrix[i].size()) != 2 * c.mode_count) {
        fail("measurement.matrix[" + std::to_string(i) + "]", "must have 2 * mode_count entries");
      }
    }
  } else {
    fail("measurement.kind", "must be low_modes, velocity_probe or custom");
  }
  const auto& d = c.disturbance;
  if (d.v_amplitude < 0.0) fail("disturbance.v.amplitude", "must be >= 0");
  if (!(d.v_correlation_time > 0.0)) fail("disturbance.v.correlation_time", "must be positive");
  if (d.eta_amplitude < 0.0) fail("disturbance.eta.amplitude", "must be >= 0");
  if (d.mu_amplitude < 0.0) fail("disturbance.mu.amplitude", "must be >= 0");
  if (!(c.trust_radius > 0.0)) fail("trust_radius", "must be positive");
  const auto& t = c.tolerances;
  if (!(t.ocp > 0.0)) fail("tolerances.ocp", "must be positive");
  if (!(t.cg > 0.0)) fail("tolerances.cg", "must be positive");
  if (!(t.argmin > 0.0)) fail("tolerances.argmin", "must be positive");
  if (!(t.fixed_point > 0.0)) fail("tolerances.fixed_point", "must be positive");
  if (!(t.margin_floor >= 0.0)) fail("tolerances.margin_floor", "must be >= 0");
  if (t.ocp_max_iter < 1) fail("tolerances.ocp_max_iter", "must be >= 1");
  if (t.cg_max_iter < 1) fail("tolerances.cg_max_iter", "must be >= 1");
  if (t.argmin_max_iter < 1) fail("tolerances.argmin_max_iter", "must be >= 1");
  if (t.fixed_point_max_iter < 1) fail("tolerances.fixed_point_max_iter", "must be >= 1");
  if (c.gain.refresh_every < 1) fail("gain.refresh_every", "must be >= 1");
  if (c.riccati_substeps < 1) fail("riccati_substeps", "must be >= 1");
  if (c.argmin_samples < 1) fail("argmin_samples", "must be >= 1");
}

ScenarioConfig config_from_json(const json& j) {
  require_object(j, "");
  reject_unknown(j, "",
                 {"mode_count", "domain_length", "dealias_factor", "t_final", "dt", "alpha",
                  "cubic_on", "initial_state", "measurement", "disturbance", "seed",
                  "trust_radius", "tolerances", "gain", "riccati_substeps", "argmin_samples"});
  ScenarioConfig c;
  auto num = [&](const char* key, double& out) {
    optional_field(j, "", key, [&](const json& x, const std::string& p) { out = get_number(x, p); });
  };
  auto integer = [&](const char* key, int& out) {
    optional_field(j, "", key, [&](const json& x, const std::string& p) { out = get_int(x, p); });
  };
  integer("mode_count", c.mode_count);
  num("domain_length", c.domain_length);
  num("dealias_factor", c.dealias_factor);
  num("t_final", c.t_final);
  num("dt", c.dt);
  num("alpha", c.alpha);
  optional_field(j, "", "cubic_on",
                 [&](const json& x, const std::string& p) { c.cubic_on = get_bool(x, p); });
  optional_field(j, "", "initial_state", [&](const json& x, const std::string& p) {
    require_object(x, p);
    reject_unknown(x, p, {"displacement", "velocity"});
    c.initial_displacement.clear();
    c.initial_velocity.clear();
    optional_field(x, p, "displacement", [&](const json& v, const std::string& q) {
      c.initial_displacement = get_numbers(v, q);
    });
    optional_field(x, p, "velocity", [&](const json& v, const std::string& q) {
      c.initial_velocity = get_numbers(v, q);
    });
  });
  optional_field(j, "", "measurement",
                 [&](const json& x, const std::string& p) { read_measurement(x, p, c.measurement); });
  optional_field(j, "", "disturbance",
                 [&](const json& x, const std::string& p) { read_disturbance(x, p, c.disturbance); });
  optional_field(j, "", "seed", [&](const json& x, const std::string& p) {
    if (x.is_number_unsigned()) {
      c.seed = x.get<std::uint64_t>();
    } else if (x.is_number_integer() && x.get<std::int64_t>() >= 0) {
      c.seed = static_cast<std::uint64_t>(x.get<std::int64_t>());
    } else {
      fail(p, "expected a non-negative 64-bit integer");
    }
  });
  num("trust_radius", c.trust_radius);
  optional_field(j, "", "tolerances",
                 [&](const json& x, const std::string& p) { read_tolerances(x, p, c.tolerances); });
  optional_field(j, "", "gain", [&](const json& x, const std::string& p) { read_gain(x, p, c.gain); });
  integer("riccati_substeps", c.riccati_substeps);
  integer("argmin_samples", c.argmin_samples);
  validate(c);
  return c;
}

json config_to_json(const ScenarioConfig& c) {
  json m = {{"kind", c.measurement.kind}};
  if (c.measurement.kind == "low_modes") m["m"] = c.measurement.m;
  if (c.measurement.kind == "velocity_probe") m["points"] = c.measurement.points;
  if (c.measurement.kind == "custom") m["matrix"] = c.measurement.matrix;
  const auto& d = c.disturbance;
  json gain = {{"kind", c.gain.kind == GainMode::Kind::riccati_nominal ? "riccati_nominal"
                                                                       : "full_hessian"}};
  if (c.gain.kind == GainMode::Kind::full_hessian) gain["refresh_every"] = c.gain.refresh_every;
  const auto& t = c.tolerances;
  return {
      {"mode_count", c.mode_count},
      {"domain_length", c.domain_length},
      {"dealias_factor", c.dealias_factor},
      {"t_final", c.t_final},
      {"dt", c.dt},
      {"alpha", c.alpha},
      {"cubic_on", c.cubic_on},
      {"initial_state", {{"displacement", c.initial_displacement}, {"velocity", c.initial_velocity}}},
      {"measurement", m},
      {"disturbance",
       {{"v", {{"kind", d.v_kind}, {"amplitude", d.v_amplitude},
               {"correlation_time", d.v_correlation_time}}},
        {"eta", {{"kind", d.eta_kind}, {"amplitude", d.eta_amplitude}}},
        {"mu", {{"kind", d.mu_kind}, {"amplitude", d.mu_amplitude}}}}},
      {"seed", c.seed},
      {"trust_radius", c.trust_radius},
      {"tolerances",
       {{"ocp", t.ocp}, {"ocp_max_iter", t.ocp_max_iter}, {"cg", t.cg},
        {"cg_max_iter", t.cg_max_iter}, {"argmin", t.argmin},
        {"argmin_max_iter", t.argmin_max_iter}, {"fixed_point", t.fixed_point},
        {"fixed_point_max_iter", t.fixed_point_max_iter}, {"margin_floor", t.margin_floor}}},
      {"gain", gain},
      {"riccati_substeps", c.riccati_substeps},
      {"argmin_samples", c.argmin_samples},
  };
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config: invalid JSON in '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "': expected key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &j;
  std::stringstream parts(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(parts, key, '.')) {
    if (key.empty()) throw ValidationError("override '" + assignment + "': empty path segment");
    keys.push_back(key);
  }
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->is_object()) throw ValidationError("override '" + path + "': not an object path");
    node = &(*node)[keys[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ValidationError("override '" + path + "': not an object path");
  (*node)[keys.back()] = value;
}

}  // namespace mortensen::harness
