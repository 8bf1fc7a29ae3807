// Generates one Gaussian field, runs three storage cycles and prints the
// well balance and the domain mass check per component.

#include <cstdio>

#include "uhs/geomodel.hpp"
#include "uhs/simulator.hpp"

int main() {
  uhs::GridSpec grid{64, 64, 120.0, 120.0, 100.0};
  uhs::FieldParams field;
  field.corr_length_x = field.corr_length_y = 700.0;
  field.seed = 7;
  const auto geo = uhs::generate_field(field, grid);

  const uhs::SimConfig config;
  const uhs::FluidProps fluids;
  const auto schedule = uhs::default_schedule(3, 10.0, 200.0, 60.0);
  const auto series = uhs::run_simulation(geo, schedule, config, fluids, uhs::RelPermModel{});

  const auto& first = series.snapshots.front();
  const auto& last = series.snapshots.back();
  const auto m0 = uhs::component_masses(first, geo, fluids, config);
  const auto m1 = uhs::component_masses(last, geo, fluids, config);
  std::printf("%zu snapshots, %d steps, %d CFL splits\n", series.snapshots.size(), series.diagnostics.steps,
              series.diagnostics.substep_splits);
  for (int k = 0; k < uhs::kComponents; ++k) {
    const auto i = static_cast<std::size_t>(k);
    std::printf("%-8s injected %12.4e kg  produced %12.4e kg  balance error %9.2e kg\n", uhs::component_name(k),
                last.wells.injected[i], last.wells.produced[i], (m1[i] - m0[i]) - last.wells.net(k));
  }
}
