#pragma once

// Learning samples from simulation snapshots: channel transforms, splits and
// normalization statistics.
//
// Input channel order (fixed):
//   static          [porosity, permeability, distance, cycle, time]
//   autoregressive  [porosity, permeability, distance, cycle, previous target]
// Porosity, permeability (mD) and pressure (bar) are standardized with
// training-split statistics. Saturation targets are used as is; the
// previous-saturation input channel is standardized.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "uhs/error.hpp"
#include "uhs/rng.hpp"
#include "uhs/schedule.hpp"

namespace uhs {

enum class SampleMode { static_time, autoregressive };
enum class Target { saturation, pressure };

inline const char* to_string(SampleMode m) { return m == SampleMode::static_time ? "static" : "auto"; }
inline const char* to_string(Target t) { return t == Target::saturation ? "saturation" : "pressure"; }

inline SampleMode sample_mode_from_string(const std::string& s) {
  if (s == "static") return SampleMode::static_time;
  if (s == "auto" || s == "autoregressive") return SampleMode::autoregressive;
  throw InvalidArgument("unknown mode '" + s + "' (expected static|auto)");
}

inline Target target_from_string(const std::string& s) {
  if (s == "saturation") return Target::saturation;
  if (s == "pressure") return Target::pressure;
  throw InvalidArgument("unknown target '" + s + "' (expected saturation|pressure)");
}

inline constexpr int kInputChannels = 5;

struct Sample {
  std::vector<float> input;   // kInputChannels x ny x nx
  std::vector<float> target;  // ny x nx
};

inline std::array<const char*, kInputChannels> channel_order(SampleMode mode) {
  if (mode == SampleMode::static_time) return {"porosity", "permeability", "distance", "cycle", "time"};
  return {"porosity", "permeability", "distance", "cycle", "previous_target"};
}

// ---------------------------------------------------------------------------
// Field transforms

enum class BlockAverage { arithmetic, geometric, pore_weighted };

/// Block average over factor x factor blocks of a row-major nx*ny field.
/// `porosity` is only read for pore-volume weighting.
inline std::vector<double> downsample(std::span<const double> field, std::size_t nx, std::size_t ny, std::size_t factor,
                                      BlockAverage kind, std::span<const double> porosity = {}) {
  require(factor >= 1, "downsample factor must be >= 1");
  require(field.size() == nx * ny, "field size does not match grid");
  if (nx % factor != 0 || ny % factor != 0) throw InvalidArgument("resolution not divisible by downsample factor");
  if (kind == BlockAverage::pore_weighted) require(porosity.size() == field.size(), "porosity needed for weighting");
  if (factor == 1) return {field.begin(), field.end()};
  const std::size_t cx = nx / factor;
  const std::size_t cy = ny / factor;
  std::vector<double> out(cx * cy);
  for (std::size_t J = 0; J < cy; ++J) {
    for (std::size_t I = 0; I < cx; ++I) {
      double sum = 0.0;
      double weight = 0.0;
      for (std::size_t j = J * factor; j < (J + 1) * factor; ++j) {
        for (std::size_t i = I * factor; i < (I + 1) * factor; ++i) {
          const double v = field[j * nx + i];
          switch (kind) {
            case BlockAverage::arithmetic: sum += v; weight += 1.0; break;
            case BlockAverage::geometric: sum += std::log(v); weight += 1.0; break;
            case BlockAverage::pore_weighted: sum += porosity[j * nx + i] * v; weight += porosity[j * nx + i]; break;
          }
        }
      }
      const double mean = sum / weight;
      out[J * cx + I] = kind == BlockAverage::geometric ? std::exp(mean) : mean;
    }
  }
  return out;
}

/// 1 at the well cell (nx/2, ny/2), falling linearly with Euclidean cell
/// distance to 0 at the farthest cell.
inline std::vector<double> distance_channel(std::size_t nx, std::size_t ny) {
  const double wi = static_cast<double>(nx / 2);
  const double wj = static_cast<double>(ny / 2);
  std::vector<double> d(nx * ny);
  double max_d = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double v = std::hypot(static_cast<double>(i) - wi, static_cast<double>(j) - wj);
      d[j * nx + i] = v;
      max_d = std::max(max_d, v);
    }
  }
  for (auto& v : d) v = 1.0 - v / max_d;
  return d;
}

/// +1 when output step `step` (1-based) closes an interval spent injecting,
/// -1 otherwise. Steps past the schedule follow the periodic cycle.
inline int cycle_indicator(int step, const Schedule& schedule, double output_interval) {
  require(step >= 1, "cycle indicator is defined for steps >= 1");
  return schedule.stage_ending_at(step * output_interval).injects() ? 1 : -1;
}

inline double time_channel(int step, int horizon) {
  require(step >= 1, "time channel is defined for steps >= 1");
  require(horizon >= 1, "time horizon must be positive");
  return static_cast<double>(step) / static_cast<double>(horizon);
}

// ---------------------------------------------------------------------------
// Statistics

struct Moments {
  double mean = 0.0;
  double std = 1.0;

  double normalize(double x) const noexcept { return (x - mean) / std; }
  double denormalize(double z) const noexcept { return z * std + mean; }
  friend bool operator==(const Moments&, const Moments&) = default;
};

struct ChannelStats {
  Moments porosity;
  Moments permeability;
  Moments pressure;
  Moments saturation;
  friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

/// Streaming mean / variance (Welford) in insertion order.
class MomentAccumulator {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  template <typename Range>
  void add_all(const Range& r) {
    for (auto v : r) add(static_cast<double>(v));
  }
  std::size_t count() const noexcept { return n_; }

  Moments moments(const char* channel) const {
    require(n_ > 0, std::string("no samples for channel ") + channel);
    const double var = m2_ / static_cast<double>(n_);
    if (!(var > 0.0)) throw InvalidArgument(std::string("zero variance in channel ") + channel);
    return {mean_, std::sqrt(var)};
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// ---------------------------------------------------------------------------
// Splits

struct SplitRatios {
  double train = 0.70;
  double val_geo = 0.15;
  double test = 0.15;
};

struct SampleRef {
  int sim = 0;   // position in the dataset
  int step = 0;  // 1-based output step
  friend bool operator==(const SampleRef&, const SampleRef&) = default;
};

enum class View { train, val1, val2, val3, test };

inline const char* to_string(View v) {
  switch (v) {
    case View::train: return "train";
    case View::val1: return "val1";
    case View::val2: return "val2";
    case View::val3: return "val3";
    default: return "test";
  }
}

struct SplitManifest {
  std::vector<int> train;
  std::vector<int> val_geo;
  std::vector<int> test;
  int t_train = 0;  // last training step
  int n_steps = 0;  // post-initial snapshots per simulation

  std::vector<SampleRef> view(View v) const {
    const std::vector<int>* sims = &train;
    int first = 1;
    int last = t_train;
    switch (v) {
      case View::train: break;
      case View::val1: first = t_train + 1; last = n_steps; break;
      case View::val2: sims = &val_geo; break;
      case View::val3: sims = &val_geo; first = t_train + 1; last = n_steps; break;
      case View::test: sims = &test; last = n_steps; break;
    }
    std::vector<SampleRef> out;
    for (int s : *sims) {
      for (int k = first; k <= last; ++k) out.push_back({s, k});
    }
    return out;
  }

  void validate(int n_sims) const {
    require(t_train >= 1 && t_train < n_steps, "T_train must lie in [1, n_steps)");
    std::vector<int> all;
    for (const auto* v : {&train, &val_geo, &test}) all.insert(all.end(), v->begin(), v->end());
    std::sort(all.begin(), all.end());
    require(static_cast<int>(all.size()) == n_sims, "split lists must cover every simulation");
    for (int i = 0; i < n_sims; ++i) require(all[static_cast<std::size_t>(i)] == i, "split lists must be disjoint");
  }

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

/// Last training step: 70 % of the horizon rounded down to a whole stage
/// (3 outputs).
inline int training_horizon(int n_steps, int outputs_per_stage = 3) {
  const int raw = static_cast<int>(std::floor(0.7 * n_steps + 1e-9));
  return raw - raw % outputs_per_stage;
}

inline SplitManifest build_split_manifest(int n_sims, int n_steps, const SplitRatios& ratios, std::uint64_t seed,
                                          int outputs_per_stage = 3) {
  require(n_sims >= 3, "need at least 3 simulations to split");
  require(ratios.train > 0.0 && ratios.val_geo > 0.0 && ratios.test > 0.0, "split ratios must be positive");
  const double total = ratios.train + ratios.val_geo + ratios.test;
  const int n_val = static_cast<int>(std::floor(n_sims * ratios.val_geo / total + 0.5));
  const int n_test = static_cast<int>(std::floor(n_sims * ratios.test / total + 0.5));
  const int n_train = n_sims - n_val - n_test;
  if (n_val < 1 || n_test < 1 || n_train < 1) throw InvalidArgument("too few simulations for a three-way split");

  std::vector<int> ids(static_cast<std::size_t>(n_sims));
  std::iota(ids.begin(), ids.end(), 0);
  CounterRng rng(seed);
  shuffle(ids, rng);

  SplitManifest m;
  m.train.assign(ids.begin(), ids.begin() + n_train);
  m.val_geo.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  m.test.assign(ids.begin() + n_train + n_val, ids.end());
  std::sort(m.train.begin(), m.train.end());
  std::sort(m.val_geo.begin(), m.val_geo.end());
  std::sort(m.test.begin(), m.test.end());
  m.n_steps = n_steps;
  m.t_train = training_horizon(n_steps, outputs_per_stage);
  m.validate(n_sims);
  return m;
}

}  // namespace uhs
