#pragma once

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "uhs/geomodel.hpp"
#include "uhs/schedule.hpp"
#include "uhs/sim_types.hpp"

namespace uhs::test {

inline GridSpec small_grid(std::size_t n = 9, double d = 100.0) { return {n, n, d, d, 20.0, 0.0, 0.0}; }

inline GeoModel homogeneous(const GridSpec& g, double k = 100.0, double phi = 0.2) {
  return {g, std::vector<double>(g.cell_count(), phi), std::vector<double>(g.cell_count(), k)};
}

/// One month inject, one month withdraw, `cycles` times, outputs every 10 days.
inline Schedule short_schedule(int cycles = 1, double rate = 2.0) {
  Schedule s;
  s.cycle.push_back({StageKind::inject_h2, units::month, {ControlKind::mass_rate, rate, 200.0}, 1.0});
  s.cycle.push_back({StageKind::withdraw, units::month, {ControlKind::fixed_bhp, 0.0, 60.0}, 1.0});
  s.cycles = cycles;
  return s;
}

inline SimConfig short_config() {
  SimConfig c;
  c.output_interval = 10.0 * units::day;
  return c;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("uhs_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace uhs::test
