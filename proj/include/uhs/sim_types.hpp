#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "uhs/error.hpp"
#include "uhs/fluids.hpp"
#include "uhs/geomodel.hpp"
#include "uhs/grid.hpp"

namespace uhs {

struct SimConfig {
  double time_step = units::day;             // s
  double output_interval = 2.0 * units::month;
  double pressure_tolerance = 1.0e-11;       // relative residual
  int max_solver_iterations = 20000;
  double max_cfl = 0.5;
  int max_substep_depth = 16;
  std::array<double, 2> gravity{0.0, 0.0};   // m/s^2, in-plane components
  double initial_pressure = 80.0;            // bar
  double initial_gas_saturation = 0.3;
  double initial_h2_fraction = 0.0;
  double rock_compressibility = 4.5e-10;     // 1/Pa, referenced to the initial pressure
  double well_radius = 0.1;                  // m

  void validate() const {
    require(time_step > 0.0, "time step must be positive");
    require(output_interval > 0.0, "output interval must be positive");
    const double ratio = output_interval / time_step;
    require(std::abs(ratio - std::round(ratio)) < 1e-9 * ratio && ratio >= 1.0,
            "output interval must be a multiple of the time step");
    require(pressure_tolerance > 0.0, "pressure tolerance must be positive");
    require(max_solver_iterations > 0, "solver iteration limit must be positive");
    require(max_cfl > 0.0 && max_cfl <= 1.0, "max CFL must lie in (0, 1]");
    require(initial_pressure > 0.0, "initial pressure must be positive");
    require(initial_gas_saturation >= 0.0 && initial_gas_saturation <= 1.0, "initial S_G outside [0, 1]");
    require(initial_h2_fraction >= 0.0 && initial_h2_fraction <= 1.0, "initial y outside [0, 1]");
    require(rock_compressibility >= 0.0, "rock compressibility must be non-negative");
    require(well_radius > 0.0, "well radius must be positive");
  }
};

/// Cumulative well masses per component, kg.
struct WellRecord {
  std::array<double, kComponents> injected{};
  std::array<double, kComponents> produced{};

  double net(int k) const noexcept { return injected[static_cast<std::size_t>(k)] - produced[static_cast<std::size_t>(k)]; }
  friend bool operator==(const WellRecord&, const WellRecord&) = default;
};

struct SimState {
  double time = 0.0;                    // s
  std::vector<double> pressure;         // Pa
  std::vector<double> gas_saturation;
  std::vector<double> h2_fraction;      // H2 mass fraction in the gas phase
  WellRecord wells;
  // Mass added (+) or removed (-) by round-off clamping, kg per component.
  std::array<double, kComponents> clamp_residual{};

  std::size_t cell_count() const noexcept { return pressure.size(); }

  void validate() const {
    require(gas_saturation.size() == pressure.size() && h2_fraction.size() == pressure.size(),
            "state field lengths differ");
    for (std::size_t c = 0; c < pressure.size(); ++c) {
      if (!(pressure[c] > 0.0) || !std::isfinite(pressure[c]) || !(gas_saturation[c] >= 0.0) ||
          !(gas_saturation[c] <= 1.0) || !(h2_fraction[c] >= 0.0) || !(h2_fraction[c] <= 1.0)) {
        throw NumericalError("invalid state at cell " + std::to_string(c));
      }
    }
  }

  friend bool operator==(const SimState&, const SimState&) = default;
};

inline SimState initial_state(const GridSpec& grid, const SimConfig& config) {
  const std::size_t n = grid.cell_count();
  SimState s;
  s.pressure.assign(n, config.initial_pressure * units::bar);
  s.gas_saturation.assign(n, config.initial_gas_saturation);
  s.h2_fraction.assign(n, config.initial_h2_fraction);
  return s;
}

/// Pore volume with linear rock compressibility around the initial pressure.
struct PoreVolume {
  double bulk_volume = 0.0;
  double compressibility = 0.0;  // 1/Pa
  double reference_pressure = 0.0;

  double operator()(double porosity, double pressure) const noexcept {
    return bulk_volume * porosity * (1.0 + compressibility * (pressure - reference_pressure));
  }
  double derivative(double porosity) const noexcept { return bulk_volume * porosity * compressibility; }
};

inline PoreVolume pore_volume_model(const GridSpec& grid, const SimConfig& config) {
  return {grid.cell_volume(), config.rock_compressibility, config.initial_pressure * units::bar};
}

using CellMasses = std::array<double, kComponents>;

inline CellMasses cell_masses(double pore_volume, double pressure, double sg, double y, const FluidProps& f) {
  const double gas = pore_volume * sg * gas_density(pressure, y, f);
  return {gas * y, gas * (1.0 - y), pore_volume * (1.0 - sg) * f.water_density};
}

/// Domain totals per component, compensated (Neumaier) summation in cell
/// index order.
inline CellMasses component_masses(const SimState& s, const GeoModel& geo, const FluidProps& f,
                                   const SimConfig& config) {
  const auto pv = pore_volume_model(geo.grid, config);
  CellMasses total{};
  CellMasses carry{};
  for (std::size_t c = 0; c < s.cell_count(); ++c) {
    const auto m = cell_masses(pv(geo.porosity[c], s.pressure[c]), s.pressure[c], s.gas_saturation[c],
                               s.h2_fraction[c], f);
    for (std::size_t k = 0; k < kComponents; ++k) {
      const double t = total[k] + m[k];
      carry[k] += std::abs(total[k]) >= std::abs(m[k]) ? (total[k] - t) + m[k] : (m[k] - t) + total[k];
      total[k] = t;
    }
  }
  for (std::size_t k = 0; k < kComponents; ++k) total[k] += carry[k];
  return total;
}

}  // namespace uhs
