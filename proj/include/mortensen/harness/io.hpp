#pragma once

// CSV trajectories and signals (17 significant digits, LF endings) and JSON
// files. Reading back a written CSV reproduces every double bit for bit.

#include <optional>
#include <string>

#include <json.hpp>

#include "mortensen/dynamics.hpp"

namespace mortensen::harness {

// Header t,a_1..a_N,b_1..b_N.
void write_trajectory_csv(const std::string& path, const Trajectory& t);
// The time grid is recovered from the t column unless given.
Trajectory read_trajectory_csv(const std::string& path,
                               const std::optional<TimeGrid>& grid = std::nullopt);

// Header t,<prefix>_1..<prefix>_m.
void write_signal_csv(const std::string& path, const GriddedSignal& s, const std::string& prefix);

// Rows of (index time, state) for sampled estimates.
void write_samples_csv(const std::string& path, const TimeGrid& grid,
                       const std::vector<int>& indices, const std::vector<EnergyState>& states);

void write_json(const std::string& path, const nlohmann::json& j);

std::string format_double(double x);

}  // namespace mortensen::harness
