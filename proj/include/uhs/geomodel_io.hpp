#pragma once

// .geo files: one line of JSON header, '\n', then porosity and permeability
// as row-major little-endian binary64 arrays.

#include <filesystem>

#include <nlohmann/json.hpp>

#include "uhs/binary_io.hpp"
#include "uhs/geomodel.hpp"

namespace uhs {

inline nlohmann::json grid_to_json(const GridSpec& g) {
  return {{"nx", g.nx}, {"ny", g.ny}, {"dx", g.dx}, {"dy", g.dy},
          {"thickness", g.thickness}, {"origin", {g.origin_x, g.origin_y}}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec g;
  g.nx = j.at("nx").get<std::size_t>();
  g.ny = j.at("ny").get<std::size_t>();
  g.dx = j.at("dx").get<double>();
  g.dy = j.at("dy").get<double>();
  g.thickness = j.at("thickness").get<double>();
  if (j.contains("origin")) {
    g.origin_x = j["origin"].at(0).get<double>();
    g.origin_y = j["origin"].at(1).get<double>();
  }
  return g;
}

inline io::Bytes encode_geo(const GeoModel& geo) {
  nlohmann::json header = grid_to_json(geo.grid);
  header["format"] = "uhs-geo";
  header["version"] = 1;
  header["units"] = {{"length", "m"}, {"porosity", "1"}, {"permeability", "mD"}};
  io::Bytes out;
  io::put_bytes(out, header.dump());
  out.push_back('\n');
  io::put_f64s(out, geo.porosity);
  io::put_f64s(out, geo.permeability);
  return out;
}

inline GeoModel decode_geo(std::span<const std::uint8_t> data) {
  io::Reader in(data);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.get_line(".geo header"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::layout, std::string("bad .geo header: ") + e.what());
  }
  if (header.value("format", "") != "uhs-geo") {
    throw FormatError(FormatError::Kind::bad_magic, "not a .geo file");
  }
  if (header.value("version", 0) != 1) {
    throw FormatError(FormatError::Kind::version_mismatch, "unsupported .geo version");
  }
  GeoModel geo;
  geo.grid = grid_from_json(header);
  const std::size_t n = geo.grid.cell_count();
  geo.porosity = in.get_f64s(n, "porosity");
  geo.permeability = in.get_f64s(n, "permeability");
  if (in.remaining() != 0) throw FormatError(FormatError::Kind::layout, "trailing bytes in .geo file");
  return geo;
}

inline void write_geo(const GeoModel& geo, const std::filesystem::path& path) {
  io::write_file(path, encode_geo(geo));
}

/// Reads without validating field invariants; call GeoModel::validate().
inline GeoModel read_geo(const std::filesystem::path& path) { return decode_geo(io::read_file(path)); }

}  // namespace uhs
