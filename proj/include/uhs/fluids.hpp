#pragma once

// Constitutive laws: ideal-gas mixture density, blended gas viscosity,
// Corey relative permeabilities.

#include <algorithm>
#include <cmath>
#include <string>

#include "uhs/error.hpp"

namespace uhs {

enum Component : int { kH2 = 0, kCushion = 1, kWater = 2 };
inline constexpr int kComponents = 3;

inline const char* component_name(int k) {
  switch (k) {
    case kH2: return "H2";
    case kCushion: return "cushion";
    default: return "water";
  }
}

struct FluidProps {
  double water_density = 1000.0;       // kg/m^3
  double water_viscosity = 5.0e-4;     // Pa s
  double h2_viscosity = 9.0e-6;        // Pa s
  double cushion_viscosity = 1.3e-5;   // Pa s
  double h2_molar_mass = 2.016e-3;     // kg/mol
  double cushion_molar_mass = 16.04e-3;
  double temperature = 323.15;         // K
  double gas_constant = 8.314462618;   // J/mol/K

  void validate() const {
    require(water_density > 0.0 && water_viscosity > 0.0 && h2_viscosity > 0.0 &&
                cushion_viscosity > 0.0 && h2_molar_mass > 0.0 && cushion_molar_mass > 0.0 &&
                temperature > 0.0 && gas_constant > 0.0,
            "fluid properties must be positive");
    require(h2_molar_mass < cushion_molar_mass, "cushion gas must be heavier than H2");
  }
};

struct RelPermModel {
  double residual_water = 0.2;   // S_wr
  double residual_gas = 0.05;    // S_gr
  double water_endpoint = 1.0;   // k0_rA
  double gas_endpoint = 0.9;     // k0_rG
  double water_exponent = 2.0;   // n_A
  double gas_exponent = 2.0;     // n_G

  void validate() const {
    require(residual_water >= 0.0 && residual_gas >= 0.0 && residual_water + residual_gas < 1.0,
            "residual saturations must be non-negative and sum below 1");
    require(water_endpoint > 0.0 && water_endpoint <= 1.0 && gas_endpoint > 0.0 && gas_endpoint <= 1.0,
            "relative permeability endpoints must lie in (0, 1]");
    require(water_exponent >= 1.0 && gas_exponent >= 1.0, "Corey exponents must be >= 1");
  }
};

/// Mixture molar mass from the H2 mass fraction.
inline double gas_molar_mass(double y, const FluidProps& f) {
  return 1.0 / (y / f.h2_molar_mass + (1.0 - y) / f.cushion_molar_mass);
}

/// Ideal-gas mixture density, kg/m^3. P in Pa.
inline double gas_density(double pressure, double y, const FluidProps& f) {
  if (!(y >= 0.0 && y <= 1.0)) throw InvalidArgument("H2 mass fraction outside [0, 1]");
  return pressure * gas_molar_mass(y, f) / (f.gas_constant * f.temperature);
}

/// Gas viscosity blended linearly in the H2 mass fraction.
inline double gas_viscosity(double y, const FluidProps& f) {
  return y * f.h2_viscosity + (1.0 - y) * f.cushion_viscosity;
}

struct RelPerms {
  double water = 0.0;
  double gas = 0.0;
};

inline RelPerms rel_perms(double gas_saturation, const RelPermModel& m) {
  const double mobile = 1.0 - m.residual_water - m.residual_gas;
  if (mobile <= 0.0) return {};  // both phases locked at residual
  const double sg_eff = std::clamp((gas_saturation - m.residual_gas) / mobile, 0.0, 1.0);
  const double sw_eff = std::clamp((1.0 - gas_saturation - m.residual_water) / mobile, 0.0, 1.0);
  return {m.water_endpoint * std::pow(sw_eff, m.water_exponent),
          m.gas_endpoint * std::pow(sg_eff, m.gas_exponent)};
}

/// Phase mobilities k_r / mu, 1/(Pa s).
struct Mobilities {
  double water = 0.0;
  double gas = 0.0;
  double total() const noexcept { return water + gas; }
};

inline Mobilities mobilities(double gas_saturation, double y, const FluidProps& f, const RelPermModel& m) {
  const auto kr = rel_perms(gas_saturation, m);
  return {kr.water / f.water_viscosity, kr.gas / gas_viscosity(y, f)};
}

}  // namespace uhs
