#pragma once

// Peaceman-type coupling of the central well to its grid cell.

#include <cmath>
#include <numbers>

#include "uhs/fluids.hpp"
#include "uhs/geomodel.hpp"
#include "uhs/schedule.hpp"
#include "uhs/sim_types.hpp"

namespace uhs {

struct WellSpec {
  CellIndex cell;
  double radius = 0.1;  // m
  double index = 0.0;   // WI, m^3
};

inline double equivalent_radius(const GridSpec& grid) {
  return 0.14 * std::sqrt(grid.dx * grid.dx + grid.dy * grid.dy);
}

inline double well_index(const GridSpec& grid, double permeability_md, double radius) {
  require(radius > 0.0, "wellbore radius must be positive");
  const double r_eq = equivalent_radius(grid);
  if (!(r_eq > radius)) throw InvalidArgument("equivalent radius does not exceed the wellbore radius");
  return 2.0 * std::numbers::pi * permeability_md * units::millidarcy * grid.thickness /
         std::log(r_eq / radius);
}

inline double well_index(const GridSpec& grid, const GeoModel& geo, const WellSpec& well) {
  return well_index(grid, geo.permeability[grid.index(well.cell)], well.radius);
}

inline WellSpec make_well(const GeoModel& geo, double radius) {
  WellSpec w{geo.grid.well_cell(), radius, 0.0};
  w.index = well_index(geo.grid, geo, w);
  return w;
}

/// Mass rate of one phase through a pressure-controlled connection,
/// WI * (lambda * rho) * drawdown, never negative.
inline double bhp_phase_rate(double well_idx, double mobility_density, double drawdown) {
  return std::max(0.0, well_idx * mobility_density * drawdown);
}

/// Per-component mass rates, kg/s; positive into the reservoir for
/// injection, positive out of it for production.
struct WellRates {
  CellMasses injection{};
  CellMasses production{};
  bool blocked = false;  // injection requested but the BHP cap admits no flow
  bool capped = false;   // the BHP limit reduced a rate-controlled well

  double net(int k) const noexcept {
    return injection[static_cast<std::size_t>(k)] - production[static_cast<std::size_t>(k)];
  }
};

/// Well rates for a cell at pressure `p_cell` (Pa) with saturation `sg` and
/// H2 fraction `y`. Injectors see the total cell mobility; producers split the
/// gas stream by the cell composition.
inline WellRates well_rates(double p_cell, double sg, double y, const Stage& stage, const WellSpec& well,
                            const FluidProps& fluids, const RelPermModel& relperm) {
  WellRates r;
  if (stage.kind == StageKind::shut_in) return r;
  const auto mob = mobilities(sg, y, fluids, relperm);
  const double bhp = stage.control.bhp * units::bar;

  if (stage.injects()) {
    const double y_inj = stage.kind == StageKind::cushion_fill ? 0.0 : stage.injected_h2_fraction;
    const double rho_inj = gas_density(p_cell, y_inj, fluids);
    const double cap = bhp_phase_rate(well.index, mob.total() * rho_inj, bhp - p_cell);
    double rate = cap;
    if (stage.control.kind == ControlKind::mass_rate) {
      rate = std::min(stage.control.mass_rate, cap);
      r.capped = cap < stage.control.mass_rate;
      r.blocked = stage.control.mass_rate > 0.0 && cap <= 0.0;
    }
    r.injection[kH2] = rate * y_inj;
    r.injection[kCushion] = rate * (1.0 - y_inj);
    return r;
  }

  const double rho_g = gas_density(p_cell, y, fluids);
  double gas = bhp_phase_rate(well.index, mob.gas * rho_g, p_cell - bhp);
  double water = bhp_phase_rate(well.index, mob.water * fluids.water_density, p_cell - bhp);
  if (stage.control.kind == ControlKind::mass_rate && gas > stage.control.mass_rate) {
    water *= stage.control.mass_rate / gas;
    gas = stage.control.mass_rate;
  } else if (stage.control.kind == ControlKind::mass_rate && gas < stage.control.mass_rate) {
    r.capped = true;
  }
  r.production[kH2] = gas * y;
  r.production[kCushion] = gas * (1.0 - y);
  r.production[kWater] = water;
  return r;
}

inline WellRates well_source_terms(const SimState& state, const Stage& stage, const WellSpec& well,
                                   const GridSpec& grid, const FluidProps& fluids,
                                   const RelPermModel& relperm) {
  const std::size_t c = grid.index(well.cell);
  return well_rates(state.pressure[c], state.gas_saturation[c], state.h2_fraction[c], stage, well, fluids,
                    relperm);
}

}  // namespace uhs
