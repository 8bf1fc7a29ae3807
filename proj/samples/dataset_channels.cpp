// Prints the fixed input channel orders and the cycle / time channels of the
// default three-cycle schedule.

#include <cstdio>

#include "uhs/dataset.hpp"

int main() {
  for (auto mode : {uhs::SampleMode::static_time, uhs::SampleMode::autoregressive}) {
    std::printf("%-7s", uhs::to_string(mode));
    for (const char* c : uhs::channel_order(mode)) std::printf(" %s", c);
    std::printf("\n");
  }
  const auto schedule = uhs::default_schedule(3, 10.0, 200.0, 60.0);
  const double interval = 2.0 * uhs::units::month;
  std::printf("step cycle time\n");
  for (int step = 1; step <= 18; ++step) {
    std::printf("%4d %+5d %.4f\n", step, uhs::cycle_indicator(step, schedule, interval), uhs::time_channel(step, 18));
  }
  const auto m = uhs::build_split_manifest(20, 18, {}, 1);
  std::printf("20 sims: %zu train / %zu val / %zu test, T_train %d\n", m.train.size(), m.val_geo.size(),
              m.test.size(), m.t_train);
}
