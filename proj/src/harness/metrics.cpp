#include "mortensen/harness/metrics.hpp"

#include <algorithm>

namespace mortensen::harness {

using nlohmann::json;

json report_header(const std::string& command, const ScenarioConfig& cfg) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", config_to_json(cfg)}};
}

json margins_json(const TimeGrid& grid, const std::vector<double>& margins) {
  json out = {{"t", json::array()}, {"margin", json::array()}};
  if (margins.empty()) return out;
  for (std::size_t k = 0; k < margins.size(); ++k) {
    out["t"].push_back(grid.time(static_cast<int>(k)));
    out["margin"].push_back(margins[k]);
  }
  out["min"] = *std::min_element(margins.begin(), margins.end());
  out["max"] = *std::max_element(margins.begin(), margins.end());
  return out;
}

json run_json(const SpectralGrid& grid, const ObserverRun& run) {
  double sup = 0.0;
  for (const auto& s : run.shifted.states) sup = std::max(sup, energy_norm(grid, s));
  double margin = run.gain_margins.empty()
                      ? 0.0
                      : *std::min_element(run.gain_margins.begin(), run.gain_margins.end());
  return {{"residual", run.residual},
          {"iterations", run.iterations},
          {"sup_shifted_energy", sup},
          {"min_gain_margin", margin}};
}

json argmin_json(const ArgminResult& r) {
  return {{"indices", r.indices},
          {"margins", r.margins},
          {"newton_iterations", r.newton_iterations},
          {"gradient_norms", r.gradient_norms}};
}

json comparison_json(const Comparison& c) {
  json errors = json::array();
  for (const auto& e : c.errors) {
    json item = {{"name", e.name},
                 {"indices", e.indices},
                 {"errors", e.errors},
                 {"terminal_error", e.terminal_error},
                 {"sup_error", e.sup_error}};
    item["min_margin"] = e.min_margin ? json(*e.min_margin) : json(nullptr);
    errors.push_back(std::move(item));
  }
  json pairs = json::array();
  for (const auto& d : c.discrepancies) {
    pairs.push_back({{"first", d.first},
                     {"second", d.second},
                     {"common_samples", d.common_samples},
                     {"sup_discrepancy", d.sup_discrepancy}});
  }
  return {{"errors", errors}, {"discrepancies", pairs}};
}

void Timing::start(const std::string& name) {
  current_ = name;
  begin_ = std::chrono::steady_clock::now();
}

void Timing::stop() {
  const auto end = std::chrono::steady_clock::now();
  sections_[current_] = std::chrono::duration<double>(end - begin_).count();
}

json Timing::json() const { return {{"schema_version", kSchemaVersion}, {"seconds", sections_}}; }

}  // namespace mortensen::harness
