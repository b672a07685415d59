#include "mortensen/harness/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mortensen/errors.hpp"

namespace mortensen::harness {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  return out;
}

std::string state_header(int n) {
  std::string h = "t";
  for (int k = 1; k <= n; ++k) h += ",a_" + std::to_string(k);
  for (int k = 1; k <= n; ++k) h += ",b_" + std::to_string(k);
  return h;
}

void write_state_row(std::ostream& out, double t, const EnergyState& s) {
  out << format_double(t);
  for (Eigen::Index k = 0; k < s.displacement.size(); ++k) out << ',' << format_double(s.displacement[k]);
  for (Eigen::Index k = 0; k < s.velocity.size(); ++k) out << ',' << format_double(s.velocity[k]);
  out << '\n';
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& t) {
  auto out = open_out(path);
  const int n = t.states.empty() ? 0 : t.states.front().mode_count();
  out << state_header(n) << '\n';
  for (int k = 0; k < static_cast<int>(t.states.size()); ++k) write_state_row(out, t.grid.time(k), t.at(k));
}

Trajectory read_trajectory_csv(const std::string& path, const std::optional<TimeGrid>& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  const auto columns = std::count(line.begin(), line.end(), ',');
  if (columns < 2 || columns % 2 != 0) throw ValidationError(path + ": malformed header");
  const int n = static_cast<int>(columns / 2);

  std::vector<double> times;
  Trajectory out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> values;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      const double x = std::strtod(p, &end);
      if (end == p) throw ValidationError(path + ": row " + std::to_string(row) + " is not numeric");
      values.push_back(x);
      if (*end == ',') {
        p = end + 1;
      } else if (*end == '\0' || *end == '\r') {
        break;
      } else {
        throw ValidationError(path + ": row " + std::to_string(row) + " is malformed");
      }
    }
    if (static_cast<int>(values.size()) != 2 * n + 1) {
      throw ValidationError(path + ": row " + std::to_string(row) + " has the wrong column count");
    }
    times.push_back(values[0]);
    EnergyState s = EnergyState::zero(n);
    for (int k = 0; k < n; ++k) {
      s.displacement[k] = values[1 + k];
      s.velocity[k] = values[1 + n + k];
    }
    out.states.push_back(std::move(s));
  }
  if (out.states.empty()) throw ValidationError(path + ": no rows");
  if (grid) {
    if (grid->size() != static_cast<int>(out.states.size())) {
      throw ValidationError(path + ": row count does not match the time grid");
    }
    out.grid = *grid;
  } else {
    const int steps = static_cast<int>(out.states.size()) - 1;
    out.grid = steps == 0 ? TimeGrid(1.0, 0) : TimeGrid(times[1] - times[0], steps);
  }
  return out;
}

void write_signal_csv(const std::string& path, const GriddedSignal& s, const std::string& prefix) {
  auto out = open_out(path);
  out << 't';
  for (int j = 1; j <= s.dim(); ++j) out << ',' << prefix << '_' << j;
  out << '\n';
  for (int k = 0; k < static_cast<int>(s.values.size()); ++k) {
    out << format_double(s.grid.time(k));
    for (Eigen::Index j = 0; j < s.values[k].size(); ++j) out << ',' << format_double(s.values[k][j]);
    out << '\n';
  }
}

void write_samples_csv(const std::string& path, const TimeGrid& grid,
                       const std::vector<int>& indices, const std::vector<EnergyState>& states) {
  auto out = open_out(path);
  const int n = states.empty() ? 0 : states.front().mode_count();
  out << state_header(n) << '\n';
  for (std::size_t i = 0; i < states.size(); ++i) write_state_row(out, grid.time(indices[i]), states[i]);
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace mortensen::harness
