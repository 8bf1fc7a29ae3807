#pragma once

// Explicit conservative component transport and the mass-to-state flash.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "uhs/pressure.hpp"

namespace uhs {

/// Cell state recovered from component masses.
struct FlashResult {
  double pressure = 0.0;
  double gas_saturation = 0.0;
  double h2_fraction = 0.0;
};

/// Solves  water_volume + gas_moles*R*T / P = PV(P)  for P, with PV linear in
/// P. The volume constraint is a quadratic with one positive root.
inline FlashResult flash(const CellMasses& m, double porosity, const PoreVolume& pv, double fallback_y,
                         const FluidProps& f) {
  const double gas = m[kH2] + m[kCushion];
  const double y = gas > 0.0 ? std::clamp(m[kH2] / gas, 0.0, 1.0) : fallback_y;
  const double pv_gas = gas > 0.0 ? gas * f.gas_constant * f.temperature / gas_molar_mass(y, f) : 0.0;  // P * V_gas
  const double water_volume = m[kWater] / f.water_density;

  const double a = pv.derivative(porosity);
  const double b = pv.bulk_volume * porosity * (1.0 - pv.compressibility * pv.reference_pressure) - water_volume;
  double p = std::numeric_limits<double>::quiet_NaN();
  if (a > 0.0) {
    const double disc = std::sqrt(b * b + 4.0 * a * pv_gas);
    p = b > 0.0 ? 2.0 * pv_gas / (b + disc) : (disc - b) / (2.0 * a);
  } else if (b > 0.0) {
    p = pv_gas / b;
  }
  if (a > 0.0 && p > 0.0 && pv_gas > 0.0) {
    // One Newton polish on the volume residual.
    const double g = pv(porosity, p) - water_volume - pv_gas / p;
    p -= g / (a + pv_gas / (p * p));
  }
  FlashResult r;
  r.pressure = p;
  r.h2_fraction = y;
  if (!(p > 0.0) || !std::isfinite(p)) return r;
  r.gas_saturation = pv_gas > 0.0 ? (pv_gas / p) / pv(porosity, p) : 0.0;
  return r;
}

struct TransportResult {
  SimState state;
  double cfl = 0.0;  // largest outflow-to-content ratio of any phase in any cell
};

/// Explicit upwind update of the three component masses for one step,
/// followed by a flash back to (P, S_G, y). `well` carries the rates applied
/// over the step; `pressure_new` drives the fluxes.
inline TransportResult advance_transport(const SimState& state, std::span<const double> pressure_new,
                                         const GeoModel& geo, const std::vector<Face>& faces, const CellProps& props,
                                         const WellRates& well, std::size_t well_cell, const FluidProps& fluids,
                                         const SimConfig& config, double dt) {
  const auto n = state.cell_count();
  const auto pv = pore_volume_model(geo.grid, config);

  std::vector<CellMasses> mass(n);
  std::vector<double> gas_out(n, 0.0);
  std::vector<double> water_out(n, 0.0);
  std::vector<CellMasses> delta(n, CellMasses{});
  for (std::size_t c = 0; c < n; ++c) {
    mass[c] = cell_masses(pv(geo.porosity[c], state.pressure[c]), state.pressure[c], state.gas_saturation[c],
                          state.h2_fraction[c], fluids);
  }

  for (const auto& f : faces) {
    const double rho_g_face = 0.5 * (props.gas_density[f.a] + props.gas_density[f.b]);
    const double dp = pressure_new[f.a] - pressure_new[f.b];

    const double dphi_w = dp + fluids.water_density * f.gravity_head;
    if (dphi_w != 0.0) {
      const auto up = dphi_w > 0.0 ? f.a : f.b;
      const double w = f.transmissibility * props.mobility[up].water * dphi_w * fluids.water_density;  // a -> b
      delta[f.a][kWater] -= w;
      delta[f.b][kWater] += w;
      (w > 0.0 ? water_out[f.a] : water_out[f.b]) += std::abs(w);
    }

    const double dphi_g = dp + rho_g_face * f.gravity_head;
    if (dphi_g != 0.0) {
      const auto up = dphi_g > 0.0 ? f.a : f.b;
      const double g = f.transmissibility * props.mobility[up].gas * dphi_g * props.gas_density[up];
      const double y = state.h2_fraction[up];
      delta[f.a][kH2] -= g * y;
      delta[f.b][kH2] += g * y;
      delta[f.a][kCushion] -= g * (1.0 - y);
      delta[f.b][kCushion] += g * (1.0 - y);
      (g > 0.0 ? gas_out[f.a] : gas_out[f.b]) += std::abs(g);
    }
  }
  for (int k = 0; k < kComponents; ++k) delta[well_cell][static_cast<std::size_t>(k)] += well.net(k);
  gas_out[well_cell] += well.production[kH2] + well.production[kCushion];
  water_out[well_cell] += well.production[kWater];

  TransportResult out;
  out.state = state;
  out.state.time = state.time + dt;
  for (std::size_t c = 0; c < n; ++c) {
    const double gas = mass[c][kH2] + mass[c][kCushion];
    const double ratio_g = gas_out[c] > 0.0 ? dt * gas_out[c] / gas : 0.0;
    const double ratio_w = water_out[c] > 0.0 ? dt * water_out[c] / mass[c][kWater] : 0.0;
    out.cfl = std::max({out.cfl, ratio_g, ratio_w});
  }
  if (!(out.cfl <= config.max_cfl)) return out;  // caller sub-steps

  for (int k = 0; k < kComponents; ++k) {
    out.state.wells.injected[static_cast<std::size_t>(k)] += dt * well.injection[static_cast<std::size_t>(k)];
    out.state.wells.produced[static_cast<std::size_t>(k)] += dt * well.production[static_cast<std::size_t>(k)];
  }

  for (std::size_t c = 0; c < n; ++c) {
    if (delta[c][0] == 0.0 && delta[c][1] == 0.0 && delta[c][2] == 0.0) continue;  // untouched cell
    CellMasses m{};
    const double scale = mass[c][0] + mass[c][1] + mass[c][2];
    for (std::size_t k = 0; k < kComponents; ++k) {
      m[k] = mass[c][k] + dt * delta[c][k];
      if (m[k] < 0.0) {
        if (m[k] < -1e-9 * scale) {
          throw NumericalError("negative " + std::string(component_name(static_cast<int>(k))) +
                               " mass at cell " + std::to_string(c) + " (CFL violation)");
        }
        out.state.clamp_residual[k] -= m[k];
        m[k] = 0.0;
      }
    }
    const auto r = flash(m, geo.porosity[c], pv, state.h2_fraction[c], fluids);
    if (!(r.pressure > 0.0) || !std::isfinite(r.pressure)) {
      throw NumericalError("flash failed at cell " + std::to_string(c));
    }
    double sg = r.gas_saturation;
    if (sg < 0.0 || sg > 1.0) {
      // Keep the gas masses, account for what the clamp removes from water.
      const double clamped = std::clamp(sg, 0.0, 1.0);
      out.state.clamp_residual[kWater] += pv(geo.porosity[c], r.pressure) * (sg - clamped) * fluids.water_density;
      sg = clamped;
    }
    out.state.pressure[c] = r.pressure;
    out.state.gas_saturation[c] = sg;
    out.state.h2_fraction[c] = r.h2_fraction;
  }
  return out;
}

}  // namespace uhs
