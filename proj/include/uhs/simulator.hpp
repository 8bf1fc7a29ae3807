#pragma once

// Sequential implicit-pressure / explicit-transport driver.

#include <cmath>
#include <string>
#include <vector>

#include "uhs/geomodel.hpp"
#include "uhs/pressure.hpp"
#include "uhs/schedule.hpp"
#include "uhs/sim_types.hpp"
#include "uhs/transport.hpp"
#include "uhs/well.hpp"

namespace uhs {

struct StepDiagnostics {
  int steps = 0;            // accepted transport updates, sub-steps included
  int substep_splits = 0;   // times a step was split for CFL
  int solver_iterations = 0;
  double max_pressure_residual = 0.0;
  double max_cfl = 0.0;
  int blocked_injection_steps = 0;
  int capped_steps = 0;

  void merge(const StepDiagnostics& o) {
    steps += o.steps;
    substep_splits += o.substep_splits;
    solver_iterations += o.solver_iterations;
    max_pressure_residual = std::max(max_pressure_residual, o.max_pressure_residual);
    max_cfl = std::max(max_cfl, o.max_cfl);
    blocked_injection_steps += o.blocked_injection_steps;
    capped_steps += o.capped_steps;
  }
};

/// Everything a step needs besides the state.
struct SimContext {
  const GeoModel& geo;
  const FluidProps& fluids;
  const RelPermModel& relperm;
  const SimConfig& config;
  WellSpec well;
  std::vector<Face> faces;

  SimContext(const GeoModel& g, const FluidProps& f, const RelPermModel& r, const SimConfig& c)
      : geo(g), fluids(f), relperm(r), config(c), well(make_well(g, c.well_radius)),
        faces(build_faces(g, c.gravity)) {}
};

namespace detail {

inline SimState step_impl(const SimState& state, const Stage& stage, const SimContext& ctx, double dt, int depth,
                          StepDiagnostics& diag) {
  const auto& grid = ctx.geo.grid;
  const auto wc = grid.index(ctx.well.cell);
  const auto props = cell_props(state, ctx.fluids, ctx.relperm);
  auto term = well_term(state, stage, ctx.well, grid, ctx.fluids, ctx.relperm);

  auto sys = assemble_pressure_system(state, ctx.geo, ctx.faces, props, term, wc, ctx.fluids, ctx.config, dt);
  Eigen::Map<const Eigen::VectorXd> guess_map(state.pressure.data(), static_cast<Eigen::Index>(state.cell_count()));
  Eigen::VectorXd guess = guess_map;
  auto sol = solve_pressure(sys, ctx.config.pressure_tolerance, ctx.config.max_solver_iterations, &guess);
  diag.solver_iterations += sol.iterations;
  diag.max_pressure_residual = std::max(diag.max_pressure_residual, sol.relative_residual);

  WellRates rates = term.rates;
  if (term.implicit) {
    if (sol.pressure[static_cast<Eigen::Index>(wc)] < term.bhp) {
      // Producer would turn into an injector: shut it for this step.
      term = WellTerm{};
      sys = assemble_pressure_system(state, ctx.geo, ctx.faces, props, term, wc, ctx.fluids, ctx.config, dt);
      sol = solve_pressure(sys, ctx.config.pressure_tolerance, ctx.config.max_solver_iterations, &guess);
      diag.solver_iterations += sol.iterations;
      diag.max_pressure_residual = std::max(diag.max_pressure_residual, sol.relative_residual);
      rates = WellRates{};
    } else {
      rates = well_rates(sol.pressure[static_cast<Eigen::Index>(wc)], state.gas_saturation[wc],
                         state.h2_fraction[wc], stage, ctx.well, ctx.fluids, ctx.relperm);
    }
  }

  auto tr = advance_transport(state, std::span<const double>(sol.pressure.data(), state.cell_count()), ctx.geo,
                              ctx.faces, props, rates, wc, ctx.fluids, ctx.config, dt);
  if (!(tr.cfl <= ctx.config.max_cfl)) {
    if (depth >= ctx.config.max_substep_depth) {
      throw NumericalError("CFL sub-stepping limit reached at t = " + std::to_string(state.time) + " s");
    }
    const int parts = std::max(2, static_cast<int>(std::ceil(tr.cfl / ctx.config.max_cfl)));
    ++diag.substep_splits;
    SimState s = state;
    const double sub = dt / parts;
    for (int p = 0; p < parts; ++p) s = step_impl(s, stage, ctx, sub, depth + 1, diag);
    // Remove accumulated drift in the clock.
    s.time = state.time + dt;
    return s;
  }
  ++diag.steps;
  diag.max_cfl = std::max(diag.max_cfl, tr.cfl);
  if (rates.blocked) ++diag.blocked_injection_steps;
  if (rates.capped) ++diag.capped_steps;
  return std::move(tr.state);
}

}  // namespace detail

/// One step of length dt under `stage`: assemble, solve, transport, with
/// CFL-limited sub-stepping.
inline SimState step(const SimState& state, const Stage& stage, const SimContext& ctx, double dt,
                     StepDiagnostics* diag = nullptr) {
  StepDiagnostics local;
  auto s = detail::step_impl(state, stage, ctx, dt, 0, local);
  if (diag != nullptr) diag->merge(local);
  return s;
}

struct SnapshotSeries {
  GridSpec grid;
  Schedule schedule;
  SimConfig config;
  std::vector<SimState> snapshots;  // snapshots[0] is the initial state
  StepDiagnostics diagnostics;

  std::size_t steps() const noexcept { return snapshots.empty() ? 0 : snapshots.size() - 1; }
};

/// Runs the whole schedule, storing the initial state and one snapshot per
/// output interval.
inline SnapshotSeries run_simulation(const GeoModel& geo, const Schedule& schedule, const SimConfig& config,
                                     const FluidProps& fluids, const RelPermModel& relperm) {
  geo.validate();
  schedule.validate();
  config.validate();
  fluids.validate();
  relperm.validate();

  const double dt = config.time_step;
  const auto steps_per_output = static_cast<long>(std::llround(config.output_interval / dt));
  SimContext ctx(geo, fluids, relperm, config);

  SnapshotSeries out{geo.grid, schedule, config, {}, {}};
  SimState state = initial_state(geo.grid, config);
  out.snapshots.push_back(state);

  long step_count = 0;
  double clock = 0.0;
  for (const auto& stage : schedule.stages()) {
    const auto n = std::llround(stage.duration / dt);
    require(n >= 1 && std::abs(static_cast<double>(n) * dt - stage.duration) <= 1e-9 * stage.duration,
            "stage durations must be multiples of the time step");
    for (long long k = 0; k < n; ++k) {
      try {
        state = step(state, stage, ctx, dt, &out.diagnostics);
      } catch (const Error& e) {
        throw NumericalError(std::string(e.what()) + " (failing time " + std::to_string(clock) + " s)");
      }
      ++step_count;
      clock = static_cast<double>(step_count) * dt;
      state.time = clock;
      if (step_count % steps_per_output == 0) out.snapshots.push_back(state);
    }
  }
  return out;
}

}  // namespace uhs
