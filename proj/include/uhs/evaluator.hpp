#pragma once

// Evaluation: static and closed-loop predictions, per-step MAE curves,
// auto-minus-static difference curves and storage metrics from well records.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uhs/dataset_io.hpp"
#include "uhs/snapshot_io.hpp"

namespace uhs {

/// Maps a model input tensor to a model-space output field.
using Predictor = std::function<std::vector<float>(std::span<const float> input)>;

inline std::vector<std::vector<float>> static_series(const DatasetBundle& b, int sim, const Predictor& model,
                                                     const std::vector<int>& steps) {
  std::vector<std::vector<float>> out;
  out.reserve(steps.size());
  for (int s : steps) out.push_back(model(assemble_input(b, sim, s, SampleMode::static_time, Target::saturation, {})));
  return out;
}

/// Closed loop from the true initial field: the input for step k carries the
/// model's own output for k - 1. Returns steps 1..last.
inline std::vector<std::vector<float>> autoregressive_rollout(const DatasetBundle& b, int sim, Target target,
                                                              const Predictor& model, std::span<const float> initial,
                                                              int last_step) {
  require(last_step >= 1, "rollout needs at least one step");
  std::vector<std::vector<float>> out;
  std::vector<float> prev(initial.begin(), initial.end());
  for (int s = 1; s <= last_step; ++s) {
    auto y = model(assemble_input(b, sim, s, SampleMode::autoregressive, target, prev));
    for (float v : y) {
      if (!std::isfinite(v)) throw NumericalError("rollout diverged at step " + std::to_string(s));
    }
    prev = y;
    out.push_back(std::move(y));
  }
  return out;
}

inline std::vector<double> mae_curve(const std::vector<std::vector<double>>& pred,
                                     const std::vector<std::vector<double>>& truth) {
  require(pred.size() == truth.size(), "prediction and truth series differ in length");
  std::vector<double> curve;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    require(pred[t].size() == truth[t].size() && !pred[t].empty(), "field sizes differ at step " + std::to_string(t));
    double sum = 0.0;
    for (std::size_t i = 0; i < pred[t].size(); ++i) sum += std::abs(pred[t][i] - truth[t][i]);
    curve.push_back(sum / static_cast<double>(pred[t].size()));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Reports

struct CurveRow {
  std::uint32_t sim_id = 0;
  int step = 0;
  std::string model;  // static | auto | auto_one_step | any external label
  Target target = Target::saturation;
  double mae_norm = 0.0;
  double mae_physical = 0.0;
  bool extrap = false;

  friend bool operator==(const CurveRow&, const CurveRow&) = default;
};

struct DiffRow {
  std::uint32_t sim_id = 0;
  int step = 0;
  Target target = Target::saturation;
  double diff_norm = 0.0;
  double diff_physical = 0.0;
  bool extrap = false;
};

/// Rows for one predicted series (model space) against the dataset truth.
inline std::vector<CurveRow> score_series(const DatasetBundle& b, int sim, Target target, const std::string& model,
                                          const std::vector<int>& steps,
                                          const std::vector<std::vector<float>>& predicted) {
  require(steps.size() == predicted.size(), "one prediction per step expected");
  std::vector<std::vector<double>> pn, tn, pp, tp;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto truth = target_field(b, sim, steps[k], target);
    require(predicted[k].size() == truth.size(), "prediction does not match the dataset grid");
    pn.emplace_back(predicted[k].begin(), predicted[k].end());
    tn.emplace_back(truth.begin(), truth.end());
    pp.push_back(to_physical(predicted[k], target, b.stats));
    tp.push_back(to_physical(truth, target, b.stats));
  }
  const auto norm = mae_curve(pn, tn);
  const auto phys = mae_curve(pp, tp);
  std::vector<CurveRow> rows;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    rows.push_back({b.sims.at(static_cast<std::size_t>(sim)).id, steps[k], model, target, norm[k], phys[k],
                    steps[k] > b.manifest.t_train});
  }
  return rows;
}

/// Element-wise auto - static over matching (sim, step, target) rows.
inline std::vector<DiffRow> diff_curve(const std::vector<CurveRow>& auto_rows, const std::vector<CurveRow>& static_rows) {
  require(auto_rows.size() == static_rows.size(), "reports cover different simulations or steps");
  std::vector<DiffRow> out;
  for (std::size_t i = 0; i < auto_rows.size(); ++i) {
    const auto& a = auto_rows[i];
    const auto& s = static_rows[i];
    if (a.sim_id != s.sim_id || a.step != s.step || a.target != s.target) {
      throw InvalidArgument("reports cover different simulations or steps");
    }
    out.push_back({a.sim_id, a.step, a.target, a.mae_norm - s.mae_norm, a.mae_physical - s.mae_physical, a.extrap});
  }
  return out;
}

/// Mean over simulations per (model, target, step), in first-seen order.
inline std::vector<CurveRow> mean_curves(const std::vector<CurveRow>& rows) {
  struct Acc {
    CurveRow row;
    int n = 0;
  };
  std::vector<Acc> acc;
  std::map<std::tuple<std::string, int, int>, std::size_t> index;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.model, static_cast<int>(r.target), r.step);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, acc.size());
      acc.push_back({r, 1});
      continue;
    }
    auto& a = acc[it->second];
    a.row.mae_norm += r.mae_norm;
    a.row.mae_physical += r.mae_physical;
    ++a.n;
  }
  std::vector<CurveRow> out;
  for (auto& a : acc) {
    a.row.mae_norm /= a.n;
    a.row.mae_physical /= a.n;
    a.row.sim_id = 0;
    out.push_back(a.row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Storage metrics

struct CycleMetrics {
  int cycle = 0;  // 1-based; 0 = all cycles
  std::optional<double> recovery;
  std::optional<double> purity;
  std::optional<double> gwr;  // +inf when no water was produced
  std::optional<double> injectivity;
};

struct MetricsInput {
  std::vector<double> times;  // s
  std::vector<WellRecord> wells;
  std::vector<double> mean_pressure_bar;
  Schedule schedule;
};

inline MetricsInput metrics_input(const SnapshotFile& f) {
  MetricsInput in;
  in.times = f.times;
  in.wells = f.wells;
  in.schedule = f.schedule();
  for (std::size_t s = 0; s < f.snapshot_count(); ++s) {
    const auto& p = f.field(s, "P_bar");
    double sum = 0.0;
    for (float v : p) sum += v;
    in.mean_pressure_bar.push_back(sum / static_cast<double>(p.size()));
  }
  return in;
}

namespace detail {

inline std::size_t snapshot_at(const std::vector<double>& times, double t) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - t) <= 1e-6 * std::max(1.0, std::abs(t))) return i;
  }
  throw InvalidArgument("no snapshot at cycle boundary t = " + std::to_string(t) + " s");
}

inline CycleMetrics window_metrics(const MetricsInput& in, std::size_t a, std::size_t b) {
  CycleMetrics m;
  const auto& w0 = in.wells[a];
  const auto& w1 = in.wells[b];
  const double inj_h2 = w1.injected[kH2] - w0.injected[kH2];
  const double prod_h2 = w1.produced[kH2] - w0.produced[kH2];
  const double prod_gas = prod_h2 + w1.produced[kCushion] - w0.produced[kCushion];
  const double prod_water = w1.produced[kWater] - w0.produced[kWater];
  if (inj_h2 > 0.0) m.recovery = prod_h2 / inj_h2;
  if (prod_gas > 0.0) {
    m.purity = prod_h2 / prod_gas;
    m.gwr = prod_water > 0.0 ? prod_gas / prod_water : std::numeric_limits<double>::infinity();
  }

  // Rate and drawdown averaged over snapshots that close an injection interval.
  double injected = 0.0;
  double duration = 0.0;
  double drawdown = 0.0;
  int n = 0;
  for (std::size_t s = a + 1; s <= b; ++s) {
    const auto& stage = in.schedule.stage_ending_at(in.times[s]);
    if (!stage.injects()) continue;
    double mass = 0.0;
    for (int k = 0; k < kComponents; ++k) mass += in.wells[s].injected[k] - in.wells[s - 1].injected[k];
    injected += mass;
    duration += in.times[s] - in.times[s - 1];
    drawdown += stage.control.bhp - in.mean_pressure_bar[s];
    ++n;
  }
  if (n > 0 && duration > 0.0 && drawdown > 0.0) m.injectivity = (injected / duration) / (drawdown / n);
  return m;
}

}  // namespace detail

/// Per-cycle metrics followed by a cumulative row (cycle 0).
inline std::vector<CycleMetrics> compute_uhs_metrics(const MetricsInput& in) {
  require(in.times.size() == in.wells.size() && in.times.size() == in.mean_pressure_bar.size(),
          "metrics inputs differ in length");
  require(in.times.size() >= 2, "metrics need at least two snapshots");
  in.schedule.validate();
  std::vector<CycleMetrics> out;
  const double t0 = in.schedule.preamble_duration();
  const double period = in.schedule.cycle_duration();
  const std::size_t first = detail::snapshot_at(in.times, t0);
  std::size_t a = first;
  for (int c = 1; c <= in.schedule.cycles; ++c) {
    const double end = t0 + c * period;
    if (end > in.times.back() * (1.0 + 1e-12)) break;
    const std::size_t b = detail::snapshot_at(in.times, end);
    auto m = detail::window_metrics(in, a, b);
    m.cycle = c;
    out.push_back(m);
    a = b;
  }
  auto total = detail::window_metrics(in, 0, a == first ? in.times.size() - 1 : a);
  total.cycle = 0;
  out.push_back(total);
  return out;
}

inline std::vector<CycleMetrics> compute_uhs_metrics(const SnapshotFile& f) { return compute_uhs_metrics(metrics_input(f)); }

// ---------------------------------------------------------------------------
// Prediction files (.sim layout, kind "prediction")

inline const char* prediction_channel(Target t) { return t == Target::saturation ? "S_G" : "P_bar"; }

/// Stores physical values (S_G, or pressure in bar).
inline SnapshotFile make_prediction_file(const DatasetBundle& b, int sim, Target target, SampleMode mode,
                                         const std::vector<int>& steps,
                                         const std::vector<std::vector<float>>& predicted) {
  require(steps.size() == predicted.size(), "one prediction per step expected");
  SnapshotFile f;
  f.grid = b.grid;
  f.channels = {prediction_channel(target)};
  f.header = {{"kind", "prediction"},
              {"sim_id", b.sims.at(static_cast<std::size_t>(sim)).id},
              {"target", to_string(target)},
              {"mode", to_string(mode)},
              {"steps", steps}};
  for (std::size_t k = 0; k < steps.size(); ++k) {
    require(predicted[k].size() == b.cells(), "prediction does not match the dataset grid");
    f.times.push_back(steps[k] * b.output_interval);
    const auto phys = to_physical(predicted[k], target, b.stats);
    f.frames.push_back({std::vector<float>(phys.begin(), phys.end())});
    f.wells.emplace_back();
  }
  return f;
}

struct ParsedPrediction {
  int sim = 0;  // dataset position
  Target target = Target::saturation;
  std::string mode;
  std::vector<int> steps;
  std::vector<std::vector<float>> fields;  // model space
};

/// Validates a prediction file against a dataset and converts it to model
/// space. Layout problems raise FormatError.
inline ParsedPrediction parse_prediction(const SnapshotFile& f, const DatasetBundle& b) {
  auto layout_error = [](const std::string& m) { return FormatError(FormatError::Kind::layout, m); };
  if (f.header.value("kind", "") != "prediction") throw layout_error("not a prediction file");
  ParsedPrediction p;
  std::uint32_t id = 0;
  try {
    id = f.header.at("sim_id").get<std::uint32_t>();
    p.target = target_from_string(f.header.at("target").get<std::string>());
    p.mode = f.header.at("mode").get<std::string>();
    p.steps = f.header.at("steps").get<std::vector<int>>();
  } catch (const std::exception& e) {
    throw layout_error(std::string("bad prediction header: ") + e.what());
  }
  if (!(f.grid.nx == b.grid.nx && f.grid.ny == b.grid.ny)) throw layout_error("prediction grid differs from dataset");
  if (f.channels.size() != 1 || f.channels[0] != prediction_channel(p.target)) {
    throw layout_error("prediction needs the single channel " + std::string(prediction_channel(p.target)));
  }
  if (p.steps.size() != f.snapshot_count()) throw layout_error("steps length != snapshot_count");
  const auto it = std::find_if(b.sims.begin(), b.sims.end(), [&](const SimRecord& r) { return r.id == id; });
  if (it == b.sims.end()) throw layout_error("sim_id " + std::to_string(id) + " not in dataset");
  p.sim = static_cast<int>(it - b.sims.begin());
  for (std::size_t k = 0; k < f.snapshot_count(); ++k) {
    if (p.steps[k] < 1 || p.steps[k] > b.n_steps()) throw layout_error("prediction step outside the dataset");
    const auto& src = f.frames[k][0];
    std::vector<float> field(src.size());
    for (std::size_t c = 0; c < src.size(); ++c) {
      field[c] = p.target == Target::pressure ? static_cast<float>(b.stats.pressure.normalize(src[c])) : src[c];
    }
    p.fields.push_back(std::move(field));
  }
  return p;
}

// ---------------------------------------------------------------------------
// CSV and SVG

namespace detail {

inline std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace detail

inline std::string mae_curve_csv(const std::vector<CurveRow>& rows, const std::vector<CurveRow>& means = {}) {
  std::ostringstream os;
  os << "sim_id,step,model,target,mae_norm,mae_physical,extrap\n";
  auto emit = [&](const CurveRow& r, const std::string& id) {
    os << id << ',' << r.step << ',' << r.model << ',' << to_string(r.target) << ',' << detail::num(r.mae_norm) << ','
       << detail::num(r.mae_physical) << ',' << (r.extrap ? "true" : "false") << '\n';
  };
  for (const auto& r : rows) emit(r, std::to_string(r.sim_id));
  for (const auto& r : means) emit(r, "mean");
  return os.str();
}

inline std::string diff_curve_csv(const std::vector<DiffRow>& rows, const std::vector<DiffRow>& means = {}) {
  std::ostringstream os;
  os << "sim_id,step,target,diff_norm,diff_physical,extrap\n";
  auto emit = [&](const DiffRow& r, const std::string& id) {
    os << id << ',' << r.step << ',' << to_string(r.target) << ',' << detail::num(r.diff_norm) << ','
       << detail::num(r.diff_physical) << ',' << (r.extrap ? "true" : "false") << '\n';
  };
  for (const auto& r : rows) emit(r, std::to_string(r.sim_id));
  for (const auto& r : means) emit(r, "mean");
  return os.str();
}

/// Mean difference per (target, step).
inline std::vector<DiffRow> mean_diff(const std::vector<DiffRow>& rows) {
  std::map<std::pair<int, int>, std::pair<DiffRow, int>> acc;
  for (const auto& r : rows) {
    auto [it, fresh] = acc.try_emplace({static_cast<int>(r.target), r.step}, r, 1);
    if (fresh) continue;
    it->second.first.diff_norm += r.diff_norm;
    it->second.first.diff_physical += r.diff_physical;
    ++it->second.second;
  }
  std::vector<DiffRow> out;
  for (auto& [key, v] : acc) {
    v.first.diff_norm /= v.second;
    v.first.diff_physical /= v.second;
    v.first.sim_id = 0;
    out.push_back(v.first);
  }
  return out;
}

inline std::string metrics_csv(const std::vector<std::pair<std::uint32_t, std::vector<CycleMetrics>>>& sims) {
  std::ostringstream os;
  os << "sim_id,cycle,recovery,purity,gwr,injectivity\n";
  for (const auto& [id, cycles] : sims) {
    for (const auto& m : cycles) {
      os << id << ',' << (m.cycle == 0 ? std::string("all") : std::to_string(m.cycle)) << ',' << detail::opt(m.recovery)
         << ',' << detail::opt(m.purity) << ',' << detail::opt(m.gwr) << ',' << detail::opt(m.injectivity) << '\n';
    }
  }
  return os.str();
}

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal line plot with a dashed marker at `marker_x` (skipped when NaN).
inline std::string svg_line_plot(const std::string& title, const std::vector<PlotSeries>& series,
                                 double marker_x = std::numeric_limits<double>::quiet_NaN()) {
  const double W = 480, H = 300, L = 60, R = 20, T = 30, B = 40;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 > x0)) { x0 -= 1; x1 += 1; }
  if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n"
     << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"#888\"/>\n"
     << "<text x=\"" << L << "\" y=\"" << H - 22 << "\" font-size=\"10\">" << detail::num(x0) << "</text>\n"
     << "<text x=\"" << W - R << "\" y=\"" << H - 22 << "\" font-size=\"10\" text-anchor=\"end\">" << detail::num(x1)
     << "</text>\n"
     << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" font-size=\"10\" text-anchor=\"end\">" << detail::num(y0)
     << "</text>\n"
     << "<text x=\"" << L - 4 << "\" y=\"" << T + 10 << "\" font-size=\"10\" text-anchor=\"end\">" << detail::num(y1)
     << "</text>\n";
  if (std::isfinite(marker_x) && marker_x >= x0 && marker_x <= x1) {
    os << "<line x1=\"" << px(marker_x) << "\" x2=\"" << px(marker_x) << "\" y1=\"" << T << "\" y2=\"" << H - B
       << "\" stroke=\"#555\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke=\"" << colors[k % 4] << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.y[i])) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    os << "\"/>\n<text x=\"" << L + 8 << "\" y=\"" << T + 14 + 14 * k << "\" font-size=\"11\" fill=\"" << colors[k % 4]
       << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace uhs
