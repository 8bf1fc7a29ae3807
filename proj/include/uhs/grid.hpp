#pragma once

#include <cstddef>
#include <string>

#include "uhs/error.hpp"

namespace uhs {

namespace units {
inline constexpr double millidarcy = 9.869233e-16;  // m^2
inline constexpr double bar = 1.0e5;                // Pa
inline constexpr double day = 86400.0;              // s
inline constexpr double month = 30.0 * day;         // scheduling month
}  // namespace units

struct CellIndex {
  std::size_t i = 0;  // x / column
  std::size_t j = 0;  // y / row
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Structured 2D areal grid. Fields are stored row-major with x fastest:
/// cell (i, j) lives at j * nx + i.
struct GridSpec {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  double thickness = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;

  std::size_t cell_count() const noexcept { return nx * ny; }
  std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx + i; }
  std::size_t index(CellIndex c) const noexcept { return index(c.i, c.j); }
  CellIndex well_cell() const noexcept { return {nx / 2, ny / 2}; }
  double cell_volume() const noexcept { return dx * dy * thickness; }

  void validate() const {
    require(nx >= 2 && ny >= 2, "grid needs at least 2 cells per axis");
    require(dx > 0.0 && dy > 0.0 && thickness > 0.0, "grid spacing and thickness must be positive");
    const auto w = well_cell();
    require(w.i > 0 && w.i + 1 < nx && w.j > 0 && w.j + 1 < ny,
            "well cell must lie strictly inside the grid");
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

}  // namespace uhs
