#pragma once

// JSON mapping of the configuration structs. Readers take defaults from the
// object they update, so partial documents override only what they name.

#include <string>

#include <nlohmann/json.hpp>

#include "uhs/fluids.hpp"
#include "uhs/geomodel.hpp"
#include "uhs/geomodel_io.hpp"
#include "uhs/schedule.hpp"
#include "uhs/sim_types.hpp"

namespace uhs {

using nlohmann::json;

namespace detail {
template <typename T>
void read_if(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}
}  // namespace detail

inline void update_grid(const json& j, GridSpec& g) {
  detail::read_if(j, "nx", g.nx);
  detail::read_if(j, "ny", g.ny);
  detail::read_if(j, "dx", g.dx);
  detail::read_if(j, "dy", g.dy);
  detail::read_if(j, "thickness", g.thickness);
  if (j.contains("origin")) {
    g.origin_x = j["origin"].at(0).get<double>();
    g.origin_y = j["origin"].at(1).get<double>();
  }
}

inline json to_json_value(const FieldParams& p) {
  return {{"kind", p.kind == FieldKind::gaussian ? "gaussian" : "fluvial"},
          {"log_perm_mean", p.log_perm_mean},
          {"log_perm_std", p.log_perm_std},
          {"corr_length_x", p.corr_length_x},
          {"corr_length_y", p.corr_length_y},
          {"porosity_a", p.porosity_a},
          {"porosity_b", p.porosity_b},
          {"channel_count", p.channel_count},
          {"channel_width", p.channel_width},
          {"channel_amplitude", p.channel_amplitude},
          {"channel_wavelength", p.channel_wavelength},
          {"channel_perm", p.channel_perm},
          {"background_perm", p.background_perm},
          {"seed", p.seed}};
}

inline void update_field(const json& j, FieldParams& p) {
  if (j.contains("kind")) {
    const auto k = j["kind"].get<std::string>();
    if (k == "gaussian") p.kind = FieldKind::gaussian;
    else if (k == "fluvial") p.kind = FieldKind::fluvial;
    else throw InvalidArgument("unknown field kind '" + k + "'");
  }
  detail::read_if(j, "log_perm_mean", p.log_perm_mean);
  detail::read_if(j, "log_perm_std", p.log_perm_std);
  if (j.contains("mean_perm_md")) p.log_perm_mean = std::log(j["mean_perm_md"].get<double>());
  detail::read_if(j, "corr_length_x", p.corr_length_x);
  detail::read_if(j, "corr_length_y", p.corr_length_y);
  detail::read_if(j, "porosity_a", p.porosity_a);
  detail::read_if(j, "porosity_b", p.porosity_b);
  detail::read_if(j, "channel_count", p.channel_count);
  detail::read_if(j, "channel_width", p.channel_width);
  detail::read_if(j, "channel_amplitude", p.channel_amplitude);
  detail::read_if(j, "channel_wavelength", p.channel_wavelength);
  detail::read_if(j, "channel_perm", p.channel_perm);
  detail::read_if(j, "background_perm", p.background_perm);
  detail::read_if(j, "seed", p.seed);
}

inline json to_json_value(const FluidProps& f) {
  return {{"water_density", f.water_density},       {"water_viscosity", f.water_viscosity},
          {"h2_viscosity", f.h2_viscosity},         {"cushion_viscosity", f.cushion_viscosity},
          {"h2_molar_mass", f.h2_molar_mass},       {"cushion_molar_mass", f.cushion_molar_mass},
          {"temperature", f.temperature},           {"gas_constant", f.gas_constant}};
}

inline void update_fluids(const json& j, FluidProps& f) {
  detail::read_if(j, "water_density", f.water_density);
  detail::read_if(j, "water_viscosity", f.water_viscosity);
  detail::read_if(j, "h2_viscosity", f.h2_viscosity);
  detail::read_if(j, "cushion_viscosity", f.cushion_viscosity);
  detail::read_if(j, "h2_molar_mass", f.h2_molar_mass);
  detail::read_if(j, "cushion_molar_mass", f.cushion_molar_mass);
  detail::read_if(j, "temperature", f.temperature);
  detail::read_if(j, "gas_constant", f.gas_constant);
}

inline json to_json_value(const RelPermModel& m) {
  return {{"residual_water", m.residual_water}, {"residual_gas", m.residual_gas},
          {"water_endpoint", m.water_endpoint}, {"gas_endpoint", m.gas_endpoint},
          {"water_exponent", m.water_exponent}, {"gas_exponent", m.gas_exponent}};
}

inline void update_relperm(const json& j, RelPermModel& m) {
  detail::read_if(j, "residual_water", m.residual_water);
  detail::read_if(j, "residual_gas", m.residual_gas);
  detail::read_if(j, "water_endpoint", m.water_endpoint);
  detail::read_if(j, "gas_endpoint", m.gas_endpoint);
  detail::read_if(j, "water_exponent", m.water_exponent);
  detail::read_if(j, "gas_exponent", m.gas_exponent);
}

inline json to_json_value(const Stage& s) {
  return {{"kind", to_string(s.kind)},
          {"duration_s", s.duration},
          {"control", s.control.kind == ControlKind::mass_rate ? "mass_rate" : "fixed_bhp"},
          {"mass_rate", s.control.mass_rate},
          {"bhp_bar", s.control.bhp},
          {"y_inj", s.injected_h2_fraction}};
}

inline Stage stage_from_json(const json& j) {
  Stage s;
  s.kind = stage_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("duration_months")) s.duration = j["duration_months"].get<double>() * units::month;
  detail::read_if(j, "duration_s", s.duration);
  const auto control = j.value("control", std::string(s.kind == StageKind::withdraw ? "fixed_bhp" : "mass_rate"));
  if (control == "mass_rate") s.control.kind = ControlKind::mass_rate;
  else if (control == "fixed_bhp") s.control.kind = ControlKind::fixed_bhp;
  else throw InvalidArgument("unknown well control '" + control + "'");
  detail::read_if(j, "mass_rate", s.control.mass_rate);
  detail::read_if(j, "bhp_bar", s.control.bhp);
  detail::read_if(j, "y_inj", s.injected_h2_fraction);
  return s;
}

inline json to_json_value(const Schedule& s) {
  json pre = json::array();
  for (const auto& st : s.preamble) pre.push_back(to_json_value(st));
  json cyc = json::array();
  for (const auto& st : s.cycle) cyc.push_back(to_json_value(st));
  return {{"preamble", pre}, {"cycle", cyc}, {"cycles", s.cycles}};
}

inline Schedule schedule_from_json(const json& j) {
  Schedule s;
  for (const auto& st : j.value("preamble", json::array())) s.preamble.push_back(stage_from_json(st));
  for (const auto& st : j.value("cycle", json::array())) s.cycle.push_back(stage_from_json(st));
  detail::read_if(j, "cycles", s.cycles);
  return s;
}

inline json to_json_value(const SimConfig& c) {
  return {{"time_step_s", c.time_step},
          {"output_interval_s", c.output_interval},
          {"pressure_tolerance", c.pressure_tolerance},
          {"max_solver_iterations", c.max_solver_iterations},
          {"max_cfl", c.max_cfl},
          {"max_substep_depth", c.max_substep_depth},
          {"gravity", {c.gravity[0], c.gravity[1]}},
          {"initial_pressure_bar", c.initial_pressure},
          {"initial_gas_saturation", c.initial_gas_saturation},
          {"initial_h2_fraction", c.initial_h2_fraction},
          {"rock_compressibility", c.rock_compressibility},
          {"well_radius", c.well_radius}};
}

inline void update_sim_config(const json& j, SimConfig& c) {
  if (j.contains("time_step_days")) c.time_step = j["time_step_days"].get<double>() * units::day;
  detail::read_if(j, "time_step_s", c.time_step);
  if (j.contains("output_interval_months")) c.output_interval = j["output_interval_months"].get<double>() * units::month;
  detail::read_if(j, "output_interval_s", c.output_interval);
  detail::read_if(j, "pressure_tolerance", c.pressure_tolerance);
  detail::read_if(j, "max_solver_iterations", c.max_solver_iterations);
  detail::read_if(j, "max_cfl", c.max_cfl);
  detail::read_if(j, "max_substep_depth", c.max_substep_depth);
  if (j.contains("gravity")) {
    c.gravity[0] = j["gravity"].at(0).get<double>();
    c.gravity[1] = j["gravity"].at(1).get<double>();
  }
  detail::read_if(j, "initial_pressure_bar", c.initial_pressure);
  detail::read_if(j, "initial_gas_saturation", c.initial_gas_saturation);
  detail::read_if(j, "initial_h2_fraction", c.initial_h2_fraction);
  detail::read_if(j, "rock_compressibility", c.rock_compressibility);
  detail::read_if(j, "well_radius", c.well_radius);
}

/// Short hex digest of a JSON document (FNV-1a 64 of its compact dump).
inline std::string json_digest(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = hex[h & 0xF];
  return s;
}

}  // namespace uhs
