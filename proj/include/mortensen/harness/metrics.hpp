#pragma once

// Metrics reports (schema_version 1). Reports hold only deterministic
// quantities; wall-times go to a separate timing document.

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

#include "mortensen/harness/config.hpp"
#include "mortensen/observer.hpp"

namespace mortensen::harness {

inline constexpr int kSchemaVersion = 1;

nlohmann::json report_header(const std::string& command, const ScenarioConfig& cfg);

nlohmann::json margins_json(const TimeGrid& grid, const std::vector<double>& margins);
nlohmann::json run_json(const SpectralGrid& grid, const ObserverRun& run);
nlohmann::json argmin_json(const ArgminResult& r);
nlohmann::json comparison_json(const Comparison& c);

// Named wall-clock sections.
class Timing {
 public:
  void start(const std::string& name);
  void stop();
  nlohmann::json json() const;

 private:
  std::string current_;
  std::chrono::steady_clock::time_point begin_;
  nlohmann::json sections_ = nlohmann::json::object();
};

}  // namespace mortensen::harness
