#include <cmath>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "uhs/simulator.hpp"

namespace uhs {
namespace {

TEST(Fluids, IdealGasDensity) {
  const FluidProps f;
  EXPECT_NEAR(gas_density(1e7, 1.0, f), 1e7 * 2.016e-3 / (8.314462618 * 323.15), 1e-12);
  EXPECT_NEAR(gas_density(1e7, 1.0, f), 7.50, 0.01);
  EXPECT_NEAR(gas_density(1e7, 0.0, f), 59.7, 0.05);
  EXPECT_NEAR(gas_density(1e-6, 0.5, f), 0.0, 1e-10);
  EXPECT_THROW(gas_density(1e7, 1.5, f), InvalidArgument);
  EXPECT_THROW(gas_density(1e7, -0.1, f), InvalidArgument);
}

TEST(Fluids, CoreyEndpointsAndInterior) {
  const RelPermModel m;
  EXPECT_EQ(rel_perms(m.residual_gas, m).gas, 0.0);
  EXPECT_NEAR(rel_perms(1.0 - m.residual_water, m).gas, m.gas_endpoint, 1e-15);
  EXPECT_NEAR(rel_perms(0.425, m).gas, 0.225, 1e-15);
  EXPECT_EQ(rel_perms(1.0 - m.residual_water, m).water, 0.0);
  EXPECT_NEAR(rel_perms(m.residual_gas, m).water, m.water_endpoint, 1e-15);
}

TEST(Well, PeacemanIndex) {
  const GridSpec g{9, 9, 30.0, 30.0, 100.0, 0.0, 0.0};
  EXPECT_NEAR(equivalent_radius(g), 5.9397, 1e-4);
  const double wi = well_index(g, 100.0, 0.1);
  EXPECT_NEAR(wi, 2.0 * std::numbers::pi * 100.0 * 9.869233e-16 * 100.0 / std::log(59.397), 1e-14);
  EXPECT_NEAR(wi, 1.518e-11, 0.001e-11);
  auto thick = g;
  thick.thickness = 200.0;
  EXPECT_NEAR(well_index(thick, 100.0, 0.1), 2.0 * wi, 1e-24);
  EXPECT_EQ(well_index(g, 0.0, 0.1), 0.0);
  const GridSpec fine{9, 9, 0.5, 0.5, 100.0, 0.0, 0.0};
  EXPECT_THROW(well_index(fine, 100.0, 0.1), InvalidArgument);
}

Stage withdraw_stage(double bhp_bar) { return {StageKind::withdraw, units::month, {ControlKind::fixed_bhp, 0.0, bhp_bar}, 1.0}; }

TEST(Well, ShutInAndZeroDrawdown) {
  const FluidProps f;
  const RelPermModel m;
  const WellSpec w{{4, 4}, 0.1, 1.5e-11};
  const auto shut = well_rates(1e7, 0.5, 0.7, Stage{}, w, f, m);
  for (int k = 0; k < kComponents; ++k) {
    EXPECT_EQ(shut.injection[static_cast<std::size_t>(k)], 0.0);
    EXPECT_EQ(shut.production[static_cast<std::size_t>(k)], 0.0);
  }
  const auto flat = well_rates(80e5, 0.5, 0.7, withdraw_stage(80.0), w, f, m);
  for (int k = 0; k < kComponents; ++k) EXPECT_EQ(flat.production[static_cast<std::size_t>(k)], 0.0);
}

TEST(Well, ProducerRateFromDrawdown) {
  EXPECT_NEAR(bhp_phase_rate(1.5e-11, 5e4, 1e6), 0.75, 1e-15);
  EXPECT_EQ(bhp_phase_rate(1.5e-11, 5e4, -1e6), 0.0);

  const FluidProps f;
  const RelPermModel m;
  const WellSpec w{{4, 4}, 0.1, 1.5e-11};
  const double p = 90e5;
  const double y = 0.7;
  const auto r = well_rates(p, 0.5, y, withdraw_stage(80.0), w, f, m);
  const double gas = 1.5e-11 * (rel_perms(0.5, m).gas / gas_viscosity(y, f)) * gas_density(p, y, f) * 10e5;
  EXPECT_NEAR(r.production[kH2], gas * y, 1e-12 * gas);
  EXPECT_NEAR(r.production[kCushion], gas * (1.0 - y), 1e-12 * gas);
  const double water = 1.5e-11 * (rel_perms(0.5, m).water / f.water_viscosity) * f.water_density * 10e5;
  EXPECT_NEAR(r.production[kWater], water, 1e-12 * water);
}

TEST(Well, InjectionHonoursRateAndCap) {
  const FluidProps f;
  const RelPermModel m;
  const WellSpec w{{4, 4}, 0.1, 1.5e-11};
  const Stage inj{StageKind::inject_h2, units::month, {ControlKind::mass_rate, 2.0, 200.0}, 1.0};
  const auto open = well_rates(80e5, 0.3, 0.0, inj, w, f, m);
  EXPECT_EQ(open.injection[kH2], 2.0);
  EXPECT_EQ(open.injection[kCushion], 0.0);
  EXPECT_FALSE(open.capped);

  const auto blocked = well_rates(210e5, 0.3, 0.0, inj, w, f, m);
  EXPECT_EQ(blocked.injection[kH2], 0.0);
  EXPECT_TRUE(blocked.blocked);

  const auto capped = well_rates(199.9e5, 0.3, 0.0, inj, w, f, m);
  EXPECT_LT(capped.injection[kH2], 2.0);
  EXPECT_TRUE(capped.capped);
}

// Two cells in a row with the shut-in well: everything can be written by hand.
struct TwoCell {
  GeoModel geo{{2, 1, 50.0, 40.0, 10.0, 0.0, 0.0}, {0.2, 0.2}, {150.0, 150.0}};
  FluidProps fluids;
  RelPermModel relperm;
  SimConfig config;
  SimState state;
  double dt = units::day;

  TwoCell() {
    state.pressure = {100e5, 80e5};
    state.gas_saturation = {0.4, 0.4};
    state.h2_fraction = {0.5, 0.5};
  }

  PressureSystem assemble() const {
    const auto faces = build_faces(geo);
    return assemble_pressure_system(state, geo, faces, cell_props(state, fluids, relperm), WellTerm{}, 0, fluids,
                                    config, dt);
  }

  double accumulation(std::size_t c) const {
    const double v = 50.0 * 40.0 * 10.0;
    const double cr = config.rock_compressibility;
    const double p = state.pressure[c];
    const double pv = v * 0.2 * (1.0 + cr * (p - config.initial_pressure * units::bar));
    return (v * 0.2 * cr + pv * 0.4 / p) / dt;
  }

  double transmissibility() const {
    const double lambda = rel_perms(0.4, relperm).water / fluids.water_viscosity +
                          rel_perms(0.4, relperm).gas / gas_viscosity(0.5, fluids);
    return 150.0 * units::millidarcy * (40.0 * 10.0) / 50.0 * lambda;
  }
};

TEST(Pressure, TwoCellAssemblyByHand) {
  const TwoCell tc;
  const auto sys = tc.assemble();
  const double t = tc.transmissibility();
  const double a0 = tc.accumulation(0);
  const double a1 = tc.accumulation(1);
  Eigen::MatrixXd dense(sys.matrix);
  EXPECT_NEAR(dense(0, 0), a0 + t, 1e-12 * (a0 + t));
  EXPECT_NEAR(dense(1, 1), a1 + t, 1e-12 * (a1 + t));
  EXPECT_NEAR(dense(0, 1), -t, 1e-12 * t);
  EXPECT_EQ(dense(0, 1), dense(1, 0));
  EXPECT_NEAR(sys.rhs[0], a0 * 100e5, 1e-12 * a0 * 100e5);
  EXPECT_NEAR(sys.rhs[1], a1 * 80e5, 1e-12 * a1 * 80e5);
}

TEST(Pressure, TwoCellSolveMatchesCramer) {
  const TwoCell tc;
  const auto sys = tc.assemble();
  const double t = tc.transmissibility();
  const double a0 = tc.accumulation(0) + t;
  const double a1 = tc.accumulation(1) + t;
  const double b0 = sys.rhs[0];
  const double b1 = sys.rhs[1];
  const double det = a0 * a1 - t * t;
  const double x0 = (b0 * a1 + t * b1) / det;
  const double x1 = (a0 * b1 + t * b0) / det;
  const auto sol = solve_pressure(sys, 1e-14);
  EXPECT_LE(std::abs(sol.pressure[0] - x0) / x0, 1e-12);
  EXPECT_LE(std::abs(sol.pressure[1] - x1) / x1, 1e-12);
  EXPECT_LE(relative_residual(sys, sol.pressure), 1e-14);
}

TEST(Pressure, IdentitySystem) {
  PressureSystem sys;
  sys.matrix.resize(4, 4);
  sys.matrix.setIdentity();
  sys.rhs = Eigen::Vector4d(1.0, -2.0, 3.5, 7.0);
  const auto sol = solve_pressure(sys, 1e-12);
  EXPECT_LE((sol.pressure - sys.rhs).norm(), 1e-12 * sys.rhs.norm());
}

TEST(Pressure, ImmobileFluidsGiveDiagonalMatrix) {
  TwoCell tc;
  tc.relperm.residual_gas = 0.3;
  tc.relperm.residual_water = 0.7;
  tc.state.gas_saturation = {0.3, 0.3};
  const auto sys = tc.assemble();
  Eigen::MatrixXd dense(sys.matrix);
  EXPECT_EQ(dense(0, 1), 0.0);
  EXPECT_EQ(dense(1, 0), 0.0);
  EXPECT_EQ(dense(0, 0), sys.accumulation[0]);
}

TEST(Pressure, SymmetricPositiveDefiniteOnHeterogeneousGrid) {
  FieldParams p;
  p.seed = 9;
  p.corr_length_x = p.corr_length_y = 300.0;
  const auto geo = gen_gaussian_field(p, test::small_grid(12));
  const FluidProps f;
  const RelPermModel m;
  const SimConfig cfg;
  auto s = initial_state(geo.grid, cfg);
  const auto sys = assemble_pressure_system(s, geo, f, m, make_well(geo, 0.1), Stage{}, units::day, cfg);
  Eigen::MatrixXd dense(sys.matrix);
  EXPECT_LE((dense - dense.transpose()).norm(), 1e-14 * dense.norm());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  // No-flow boundaries: each row sums to its accumulation coefficient.
  for (Eigen::Index r = 0; r < dense.rows(); ++r) {
    EXPECT_NEAR(dense.row(r).sum(), sys.accumulation[static_cast<std::size_t>(r)],
                1e-9 * dense(r, r));
  }
}

TEST(Pressure, RelabelingPermutesTheMatrix) {
  // Reversing the cell order of a 1D-like strip reverses the matrix.
  GeoModel geo{{3, 2, 50.0, 50.0, 10.0, 0.0, 0.0}, {0.2, 0.25, 0.15, 0.2, 0.3, 0.1}, {50, 200, 80, 120, 60, 300}};
  GeoModel rev = geo;
  std::reverse(rev.porosity.begin(), rev.porosity.end());
  std::reverse(rev.permeability.begin(), rev.permeability.end());
  const FluidProps f;
  const RelPermModel m;
  const SimConfig cfg;
  auto s = initial_state(geo.grid, cfg);
  s.pressure = {81e5, 82e5, 83e5, 84e5, 85e5, 86e5};
  auto sr = s;
  std::reverse(sr.pressure.begin(), sr.pressure.end());
  const auto a = assemble_pressure_system(s, geo, build_faces(geo), cell_props(s, f, m), WellTerm{}, 0, f, cfg, 1e4);
  const auto b = assemble_pressure_system(sr, rev, build_faces(rev), cell_props(sr, f, m), WellTerm{}, 0, f, cfg, 1e4);
  Eigen::MatrixXd da(a.matrix);
  Eigen::MatrixXd db(b.matrix);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(da(i, j), db(5 - i, 5 - j), 1e-12 * std::abs(da(i, i)));
  }
}

TEST(Pressure, NonFiniteCoefficientNamesTheCell) {
  TwoCell tc;
  tc.state.pressure[1] = std::nan("");
  try {
    tc.assemble();
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("cell"), std::string::npos);
  }
}

TEST(Flash, RecoversStateFromMasses) {
  const FluidProps f;
  const SimConfig cfg;
  const GridSpec g = test::small_grid();
  const auto pv = pore_volume_model(g, cfg);
  const double p = 93.7e5;
  const auto m = cell_masses(pv(0.22, p), p, 0.41, 0.63, f);
  const auto r = flash(m, 0.22, pv, 0.0, f);
  EXPECT_NEAR(r.pressure, p, 1e-9 * p);
  EXPECT_NEAR(r.gas_saturation, 0.41, 1e-12);
  EXPECT_NEAR(r.h2_fraction, 0.63, 1e-12);
}

struct Strip {
  GeoModel geo = test::homogeneous(test::small_grid());
  FluidProps fluids;
  RelPermModel relperm;
  SimConfig config;
  SimState state = initial_state(geo.grid, config);
};

TEST(Transport, NoGradientNoWellIsIdentity) {
  Strip s;
  const auto faces = build_faces(s.geo);
  const auto props = cell_props(s.state, s.fluids, s.relperm);
  const auto r = advance_transport(s.state, s.state.pressure, s.geo, faces, props, WellRates{}, 40, s.fluids,
                                   s.config, units::day);
  EXPECT_EQ(r.state.pressure, s.state.pressure);
  EXPECT_EQ(r.state.gas_saturation, s.state.gas_saturation);
  EXPECT_EQ(r.state.h2_fraction, s.state.h2_fraction);
  EXPECT_EQ(r.state.time, units::day);
}

TEST(Transport, SourceOnlyBalance) {
  Strip s;
  const auto faces = build_faces(s.geo);
  const auto props = cell_props(s.state, s.fluids, s.relperm);
  WellRates w;
  w.injection[kH2] = 0.5;
  const std::size_t wc = s.geo.grid.index(s.geo.grid.well_cell());
  const auto r = advance_transport(s.state, s.state.pressure, s.geo, faces, props, w, wc, s.fluids, s.config, 3600.0);
  const auto pv = pore_volume_model(s.geo.grid, s.config);
  const auto before = cell_masses(pv(0.2, s.state.pressure[wc]), s.state.pressure[wc], s.state.gas_saturation[wc],
                                  s.state.h2_fraction[wc], s.fluids);
  const auto after = cell_masses(pv(0.2, r.state.pressure[wc]), r.state.pressure[wc], r.state.gas_saturation[wc],
                                 r.state.h2_fraction[wc], s.fluids);
  EXPECT_NEAR(after[kH2] - before[kH2], 0.5 * 3600.0, 1e-9 * 1800.0);
  EXPECT_NEAR(after[kCushion], before[kCushion], 1e-9 * before[kCushion]);
  EXPECT_NEAR(after[kWater], before[kWater], 1e-12 * before[kWater]);
  EXPECT_EQ(r.state.wells.injected[kH2], 0.5 * 3600.0);
}

TEST(Transport, StepConservesEveryComponent) {
  FieldParams p;
  p.seed = 21;
  p.corr_length_x = p.corr_length_y = 300.0;
  const auto geo = gen_gaussian_field(p, test::small_grid(11));
  const FluidProps f;
  const RelPermModel m;
  const SimConfig cfg;
  const SimContext ctx(geo, f, m, cfg);
  const Stage inj{StageKind::inject_h2, units::month, {ControlKind::mass_rate, 1.0, 200.0}, 0.8};
  auto s0 = initial_state(geo.grid, cfg);
  const auto m0 = component_masses(s0, geo, f, cfg);
  const auto s1 = step(s0, inj, ctx, units::day);
  const auto m1 = component_masses(s1, geo, f, cfg);
  for (int k = 0; k < kComponents; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const double net = s1.wells.net(k) + s1.clamp_residual[kk];
    EXPECT_LE(std::abs((m1[kk] - m0[kk]) - net), 1e-12 * std::max({1.0, m0[kk], 86400.0})) << component_name(k);
  }
}

}  // namespace
}  // namespace uhs
