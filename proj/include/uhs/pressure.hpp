#pragma once

// Implicit pressure equation of the sequential scheme: total volume balance
// with two-point fluxes on the 5-point stencil, harmonic transmissibilities,
// phase-upwinded mobilities and a compressible accumulation term.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "uhs/fluids.hpp"
#include "uhs/geomodel.hpp"
#include "uhs/schedule.hpp"
#include "uhs/sim_types.hpp"
#include "uhs/well.hpp"

namespace uhs {

/// Connection between two neighbouring cells. `gravity_head` is G . (x_b - x_a).
struct Face {
  std::size_t a = 0;
  std::size_t b = 0;
  double transmissibility = 0.0;  // m^3 (k A / d with k in m^2)
  double gravity_head = 0.0;      // m^2/s^2
};

inline double harmonic_transmissibility(double k_a, double k_b, double area, double distance) {
  const double ka = k_a * units::millidarcy;
  const double kb = k_b * units::millidarcy;
  if (ka + kb <= 0.0) return 0.0;
  return area * 2.0 * ka * kb / (distance * (ka + kb));
}

/// x-faces row by row, then y-faces row by row. No-flow outer boundary.
inline std::vector<Face> build_faces(const GeoModel& geo, const std::array<double, 2>& gravity = {0.0, 0.0}) {
  const auto& g = geo.grid;
  std::vector<Face> faces;
  faces.reserve(2 * g.cell_count());
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i + 1 < g.nx; ++i) {
      const auto a = g.index(i, j);
      const auto b = g.index(i + 1, j);
      faces.push_back({a, b,
                       harmonic_transmissibility(geo.permeability[a], geo.permeability[b], g.dy * g.thickness, g.dx),
                       gravity[0] * g.dx});
    }
  }
  for (std::size_t j = 0; j + 1 < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const auto a = g.index(i, j);
      const auto b = g.index(i, j + 1);
      faces.push_back({a, b,
                       harmonic_transmissibility(geo.permeability[a], geo.permeability[b], g.dx * g.thickness, g.dy),
                       gravity[1] * g.dy});
    }
  }
  return faces;
}

/// Per-cell properties frozen at the start of a step.
struct CellProps {
  std::vector<Mobilities> mobility;
  std::vector<double> gas_density;
};

inline CellProps cell_props(const SimState& s, const FluidProps& fluids, const RelPermModel& relperm) {
  CellProps p;
  const auto n = s.cell_count();
  p.mobility.resize(n);
  p.gas_density.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    p.mobility[c] = mobilities(s.gas_saturation[c], s.h2_fraction[c], fluids, relperm);
    p.gas_density[c] = gas_density(s.pressure[c], s.h2_fraction[c], fluids);
  }
  return p;
}

/// Upwinded phase mobility on a face for the potential difference `dphi`
/// (a minus b). Ties take the mean so the choice is orientation-free.
inline double upwind(double dphi, double value_a, double value_b) {
  if (dphi > 0.0) return value_a;
  if (dphi < 0.0) return value_b;
  return 0.5 * (value_a + value_b);
}

struct FaceMobility {
  double water = 0.0;
  double gas = 0.0;
  double gas_density = 0.0;  // face-averaged, for the gravity term
};

inline FaceMobility face_mobility(const Face& f, std::span<const double> pressure, const CellProps& props,
                                  double water_density) {
  const double rho_g = 0.5 * (props.gas_density[f.a] + props.gas_density[f.b]);
  const double dp = pressure[f.a] - pressure[f.b];
  const double dphi_w = dp + water_density * f.gravity_head;
  const double dphi_g = dp + rho_g * f.gravity_head;
  return {upwind(dphi_w, props.mobility[f.a].water, props.mobility[f.b].water),
          upwind(dphi_g, props.mobility[f.a].gas, props.mobility[f.b].gas), rho_g};
}

/// How the well enters the pressure equation for one step.
struct WellTerm {
  bool implicit = false;    // BHP-controlled: coefficient * (P - bhp) volume outflow
  double coefficient = 0.0; // WI * lambda_total, m^3/(Pa s)
  double bhp = 0.0;         // Pa
  WellRates rates;          // explicit (rate-controlled) mass rates
};

inline WellTerm well_term(const SimState& s, const Stage& stage, const WellSpec& well, const GridSpec& grid,
                          const FluidProps& fluids, const RelPermModel& relperm) {
  WellTerm t;
  if (stage.kind == StageKind::shut_in) return t;
  const auto c = grid.index(well.cell);
  if (stage.kind == StageKind::withdraw && stage.control.kind == ControlKind::fixed_bhp) {
    t.implicit = true;
    t.coefficient = well.index * mobilities(s.gas_saturation[c], s.h2_fraction[c], fluids, relperm).total();
    t.bhp = stage.control.bhp * units::bar;
    return t;
  }
  t.rates = well_source_terms(s, stage, well, grid, fluids, relperm);
  return t;
}

struct PressureSystem {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  Eigen::VectorXd rhs;
  std::vector<double> accumulation;  // V (phi' + phi S_G / P) / dt per cell
};

inline PressureSystem assemble_pressure_system(const SimState& s, const GeoModel& geo, const std::vector<Face>& faces,
                                               const CellProps& props, const WellTerm& well,
                                               std::size_t well_cell, const FluidProps& fluids,
                                               const SimConfig& config, double dt) {
  const auto n = s.cell_count();
  const auto pv = pore_volume_model(geo.grid, config);
  PressureSystem sys;
  sys.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  sys.accumulation.resize(n);
  std::vector<double> diag(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double p = s.pressure[c];
    const double acc = (pv.derivative(geo.porosity[c]) + pv(geo.porosity[c], p) * s.gas_saturation[c] / p) / dt;
    sys.accumulation[c] = acc;
    diag[c] = acc;
    sys.rhs[static_cast<Eigen::Index>(c)] = acc * p;
  }

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(n + 2 * faces.size());
  for (const auto& f : faces) {
    const auto m = face_mobility(f, s.pressure, props, fluids.water_density);
    const double t = f.transmissibility * (m.water + m.gas);
    diag[f.a] += t;
    diag[f.b] += t;
    entries.emplace_back(static_cast<int>(f.a), static_cast<int>(f.b), -t);
    entries.emplace_back(static_cast<int>(f.b), static_cast<int>(f.a), -t);
    if (f.gravity_head != 0.0) {
      const double g = f.transmissibility *
                       (m.water * fluids.water_density + m.gas * m.gas_density) * f.gravity_head;
      sys.rhs[static_cast<Eigen::Index>(f.a)] -= g;
      sys.rhs[static_cast<Eigen::Index>(f.b)] += g;
    }
  }

  if (well.implicit) {
    diag[well_cell] += well.coefficient;
    sys.rhs[static_cast<Eigen::Index>(well_cell)] += well.coefficient * well.bhp;
  } else {
    const double p = s.pressure[well_cell];
    const double y = s.h2_fraction[well_cell];
    const double inj = well.rates.injection[kH2] + well.rates.injection[kCushion];
    if (inj > 0.0) {
      const double y_inj = well.rates.injection[kH2] / inj;
      sys.rhs[static_cast<Eigen::Index>(well_cell)] += inj / gas_density(p, y_inj, fluids);
    }
    const double prod_gas = well.rates.production[kH2] + well.rates.production[kCushion];
    if (prod_gas > 0.0) sys.rhs[static_cast<Eigen::Index>(well_cell)] -= prod_gas / gas_density(p, y, fluids);
    sys.rhs[static_cast<Eigen::Index>(well_cell)] -= well.rates.production[kWater] / fluids.water_density;
  }

  for (std::size_t c = 0; c < n; ++c) entries.emplace_back(static_cast<int>(c), static_cast<int>(c), diag[c]);
  for (const auto& e : entries) {
    if (!std::isfinite(e.value())) {
      throw NumericalError("non-finite pressure coefficient at cell " + std::to_string(e.row()));
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (!std::isfinite(sys.rhs[static_cast<Eigen::Index>(c)])) {
      throw NumericalError("non-finite pressure right-hand side at cell " + std::to_string(c));
    }
  }
  sys.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  sys.matrix.setFromTriplets(entries.begin(), entries.end());
  return sys;
}

/// Convenience overload that derives faces, properties and well terms from
/// the state.
inline PressureSystem assemble_pressure_system(const SimState& s, const GeoModel& geo, const FluidProps& fluids,
                                               const RelPermModel& relperm, const WellSpec& well,
                                               const Stage& stage, double dt, const SimConfig& config) {
  const auto faces = build_faces(geo, config.gravity);
  const auto props = cell_props(s, fluids, relperm);
  const auto term = well_term(s, stage, well, geo.grid, fluids, relperm);
  return assemble_pressure_system(s, geo, faces, props, term, geo.grid.index(well.cell), fluids, config, dt);
}

struct PressureSolution {
  Eigen::VectorXd pressure;
  int iterations = 0;
  double relative_residual = 0.0;
};

inline double relative_residual(const PressureSystem& sys, const Eigen::VectorXd& x) {
  const double bn = sys.rhs.norm();
  const double rn = (sys.rhs - sys.matrix * x).norm();
  return bn > 0.0 ? rn / bn : rn;
}

/// Preconditioned conjugate gradients (incomplete Cholesky). The returned
/// residual is recomputed from scratch, and the iteration restarts from the
/// current iterate while it exceeds the tolerance.
inline PressureSolution solve_pressure(const PressureSystem& sys, double tol, int max_iterations = 20000,
                                       const Eigen::VectorXd* guess = nullptr) {
  PressureSolution out;
  if (sys.rhs.norm() == 0.0) {
    out.pressure = Eigen::VectorXd::Zero(sys.rhs.size());
    return out;
  }
  Eigen::SparseMatrix<double> a = sys.matrix;  // column-major for the factorization
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::NaturalOrdering<int>>>
      cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(max_iterations);
  cg.compute(a);
  if (cg.info() != Eigen::Success) throw SolverError("pressure preconditioner setup failed", 0, INFINITY);

  Eigen::VectorXd x = guess != nullptr ? *guess : Eigen::VectorXd::Zero(sys.rhs.size());
  for (int restart = 0; restart < 4; ++restart) {
    x = cg.solveWithGuess(sys.rhs, x);
    out.iterations += static_cast<int>(cg.iterations());
    out.relative_residual = relative_residual(sys, x);
    if (out.relative_residual <= tol) break;
    // Tighten the internal target so the recomputed residual catches up.
    cg.setTolerance(tol * 0.1);
  }
  if (!(out.relative_residual <= tol)) {
    throw SolverError("pressure solve did not converge: " + std::to_string(out.iterations) +
                          " iterations, relative residual " + std::to_string(out.relative_residual),
                      out.iterations, out.relative_residual);
  }
  out.pressure = std::move(x);
  return out;
}

}  // namespace uhs
