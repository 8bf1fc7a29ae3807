#pragma once

// Well operating schedule: an optional preamble (e.g. cushion fill) followed
// by a repeated cycle of stages.

#include <cmath>
#include <string>
#include <vector>

#include "uhs/error.hpp"
#include "uhs/grid.hpp"

namespace uhs {

enum class StageKind { cushion_fill, inject_h2, withdraw, shut_in };

inline const char* to_string(StageKind k) {
  switch (k) {
    case StageKind::cushion_fill: return "cushion_fill";
    case StageKind::inject_h2: return "inject_H2";
    case StageKind::withdraw: return "withdraw";
    default: return "shut_in";
  }
}

inline StageKind stage_kind_from_string(const std::string& s) {
  if (s == "cushion_fill") return StageKind::cushion_fill;
  if (s == "inject_H2" || s == "inject_h2") return StageKind::inject_h2;
  if (s == "withdraw") return StageKind::withdraw;
  if (s == "shut_in") return StageKind::shut_in;
  throw InvalidArgument("unknown stage kind '" + s + "'");
}

enum class ControlKind { mass_rate, fixed_bhp };

/// Rate control honours `bhp` as a cap (injection) or floor (withdrawal).
struct WellControl {
  ControlKind kind = ControlKind::mass_rate;
  double mass_rate = 0.0;  // kg/s
  double bhp = 0.0;        // bar
};

struct Stage {
  StageKind kind = StageKind::shut_in;
  double duration = 0.0;  // s
  WellControl control;
  double injected_h2_fraction = 1.0;  // y_inj

  bool injects() const noexcept {
    return kind == StageKind::inject_h2 || kind == StageKind::cushion_fill;
  }
};

struct Schedule {
  std::vector<Stage> preamble;
  std::vector<Stage> cycle;
  int cycles = 0;

  std::vector<Stage> stages() const {
    std::vector<Stage> out = preamble;
    for (int c = 0; c < cycles; ++c) out.insert(out.end(), cycle.begin(), cycle.end());
    return out;
  }

  double preamble_duration() const {
    double t = 0.0;
    for (const auto& s : preamble) t += s.duration;
    return t;
  }

  double cycle_duration() const {
    double t = 0.0;
    for (const auto& s : cycle) t += s.duration;
    return t;
  }

  double total_duration() const { return preamble_duration() + cycles * cycle_duration(); }

  /// Stage active on the interval ending at time t, i.e. on (t - eps, t].
  /// Times past the horizon use the periodic extension of the cycle.
  const Stage& stage_ending_at(double t) const {
    require(t > 0.0, "stage lookup needs t > 0");
    double start = 0.0;
    for (const auto& s : preamble) {
      if (t <= start + s.duration) return s;
      start += s.duration;
    }
    require(!cycle.empty(), "schedule has no cycle to extend");
    const double period = cycle_duration();
    double local = std::fmod(t - start, period);
    if (local <= 0.0) local = period;  // interval ends exactly at a cycle boundary
    double acc = 0.0;
    for (const auto& s : cycle) {
      acc += s.duration;
      if (local <= acc) return s;
    }
    return cycle.back();
  }

  void validate() const {
    require(!preamble.empty() || (!cycle.empty() && cycles > 0), "schedule has no stages");
    require(cycles >= 0, "cycle count must be non-negative");
    for (const auto* list : {&preamble, &cycle}) {
      for (const auto& s : *list) {
        require(s.duration > 0.0, "stage durations must be positive");
        require(s.injected_h2_fraction >= 0.0 && s.injected_h2_fraction <= 1.0,
                "injected H2 fraction outside [0, 1]");
        if (s.kind != StageKind::shut_in) {
          require(s.control.bhp > 0.0, "BHP limits must be positive");
          require(s.control.kind == ControlKind::fixed_bhp || s.control.mass_rate >= 0.0,
                  "mass rates must be non-negative");
        }
      }
    }
  }
};

/// Optional cushion fill, then `cycles` x (inject 6 months, withdraw 6 months).
inline Schedule default_schedule(int cycles, double injection_rate, double injection_bhp_cap,
                                 double withdrawal_bhp, double cushion_months = 0.0,
                                 double cushion_rate = 0.0) {
  Schedule s;
  if (cushion_months > 0.0) {
    s.preamble.push_back({StageKind::cushion_fill, cushion_months * units::month,
                          {ControlKind::mass_rate, cushion_rate, injection_bhp_cap}, 0.0});
  }
  s.cycle.push_back({StageKind::inject_h2, 6.0 * units::month,
                     {ControlKind::mass_rate, injection_rate, injection_bhp_cap}, 1.0});
  s.cycle.push_back({StageKind::withdraw, 6.0 * units::month,
                     {ControlKind::fixed_bhp, 0.0, withdrawal_bhp}, 1.0});
  s.cycles = cycles;
  return s;
}

}  // namespace uhs
