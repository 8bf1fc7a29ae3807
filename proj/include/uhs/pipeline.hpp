#pragma once

// End-to-end commands over a run directory:
//
//   out_dir/geo/field_NNNN.geo     cmd_gen
//   out_dir/sim/field_NNNN.sim     cmd_simulate
//   out_dir/dataset.uhsd           cmd_dataset
//   out_dir/models/*.net, *.csv    cmd_train
//   out_dir/eval/*.csv, *.svg      cmd_eval, cmd_metrics

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "uhs/config.hpp"
#include "uhs/dataset_io.hpp"
#include "uhs/evaluator.hpp"
#include "uhs/geomodel_io.hpp"
#include "uhs/nn/checkpoint.hpp"
#include "uhs/nn/train.hpp"
#include "uhs/simulator.hpp"
#include "uhs/snapshot_io.hpp"

namespace uhs {

/// An upstream artifact is missing (CLI exit code 2).
class DependencyError : public Error {
 public:
  using Error::Error;
};

struct BatchFailure {
  std::string item;
  std::string message;
};

struct BatchReport {
  std::vector<std::string> done;
  std::vector<BatchFailure> failed;
};

/// Runs f(i) for i in [0, n) on up to `workers` threads. Exceptions are
/// captured per item; results are reported in index order.
inline std::vector<std::optional<std::string>> parallel_for(std::size_t n, int workers,
                                                            const std::function<void(std::size_t)>& f) {
  std::vector<std::optional<std::string>> errors(n);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    run();
    return errors;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  return errors;
}

inline std::string field_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "field_%04zu", i);
  return buf;
}

/// Sorted files with the given extension; empty when the directory is absent.
inline std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& ext) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Numeric suffix of "field_NNNN".
inline std::uint32_t field_id(const std::filesystem::path& p) {
  const auto stem = p.stem().string();
  const auto pos = stem.find_last_of('_');
  try {
    return static_cast<std::uint32_t>(std::stoul(stem.substr(pos == std::string::npos ? 0 : pos + 1)));
  } catch (const std::exception&) {
    throw InvalidArgument("cannot parse a simulation id from " + p.filename().string());
  }
}

// ---------------------------------------------------------------------------

inline GeoModel make_field(const RunConfig& cfg, std::size_t i) {
  auto geo = generate_field(cfg.field_for(i), cfg.grid);
  geo.validate();
  return geo;
}

inline BatchReport cmd_gen(const RunConfig& cfg, int n) {
  require(n >= 0, "field count must be non-negative");
  BatchReport r;
  const auto errors = parallel_for(static_cast<std::size_t>(n), cfg.workers, [&](std::size_t i) {
    write_geo(make_field(cfg, i), cfg.geo_dir() / (field_name(i) + ".geo"));
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) r.failed.push_back({field_name(i), *errors[i]});
    else r.done.push_back(field_name(i));
  }
  return r;
}

inline SnapshotSeries simulate_field(const RunConfig& cfg, const GeoModel& geo) {
  return run_simulation(geo, cfg.schedule, cfg.sim, cfg.fluids, cfg.relperm);
}

inline BatchReport cmd_simulate(const RunConfig& cfg) {
  const auto inputs = list_files(cfg.geo_dir(), ".geo");
  if (inputs.empty()) throw DependencyError("no .geo files in " + cfg.geo_dir().string() + " (run gen first)");
  std::filesystem::create_directories(cfg.sim_dir());
  const auto errors = parallel_for(inputs.size(), cfg.workers, [&](std::size_t i) {
    const auto out = cfg.sim_dir() / (inputs[i].stem().string() + ".sim");
    std::filesystem::remove(out);
    const auto series = simulate_field(cfg, read_geo(inputs[i]));
    write_sim(to_snapshot_file(series), out);
  });
  BatchReport r;
  json failures = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto name = inputs[i].stem().string();
    if (errors[i]) {
      r.failed.push_back({name, *errors[i]});
      failures.push_back({{"item", name}, {"error", *errors[i]}});
    } else {
      r.done.push_back(name);
    }
  }
  io::write_text(cfg.sim_dir() / "batch_report.json",
                 json{{"done", r.done.size()}, {"failed", failures}}.dump(2) + "\n");
  return r;
}

inline DatasetBundle cmd_dataset(const RunConfig& cfg) {
  const auto sims = list_files(cfg.sim_dir(), ".sim");
  if (sims.empty()) throw DependencyError("no .sim files in " + cfg.sim_dir().string() + " (run simulate first)");
  std::vector<DatasetSource> sources;
  for (const auto& p : sims) {
    const auto geo_path = cfg.geo_dir() / (p.stem().string() + ".geo");
    if (!std::filesystem::exists(geo_path)) throw DependencyError("missing " + geo_path.string() + " for " + p.string());
    sources.push_back({field_id(p), read_geo(geo_path), read_sim(p)});
  }
  DatasetOptions opt;
  opt.downsample_factor = cfg.downsample_factor;
  opt.ratios = cfg.ratios;
  opt.seed = hash_seed(cfg.seed, 0x5b17u);
  auto bundle = build_dataset(sources, opt);
  write_dataset(bundle, cfg.dataset_path());
  return bundle;
}

inline DatasetBundle load_dataset(const RunConfig& cfg) {
  if (!std::filesystem::exists(cfg.dataset_path())) {
    throw DependencyError("missing " + cfg.dataset_path().string() + " (run dataset first)");
  }
  return read_dataset(cfg.dataset_path());
}

inline std::vector<Sample> view_samples(const DatasetBundle& b, View v, SampleMode mode, Target target) {
  std::vector<Sample> out;
  for (const auto& ref : b.manifest.view(v)) out.push_back(assemble_sample(b, ref.sim, ref.step, mode, target));
  return out;
}

inline nn::NetSpec net_spec_for(const RunConfig& cfg, Target target) {
  nn::NetSpec s = cfg.net;
  s.in_channels = kInputChannels;
  s.head = target == Target::saturation ? nn::Head::sigmoid : nn::Head::tanhshrink;
  return s;
}

/// L2 is applied to static models only.
inline nn::TrainConfig train_config_for(const RunConfig& cfg, SampleMode mode) {
  nn::TrainConfig t = cfg.train;
  if (mode == SampleMode::autoregressive) t.l2 = 0.0;
  return t;
}

struct TrainSummary {
  nn::TrainResult<float> result;
  std::filesystem::path model;
  std::filesystem::path history;
};

/// Trains on the train view, validates on val2 (one-step error for
/// autoregressive models).
inline TrainSummary train_model(const RunConfig& cfg, const DatasetBundle& b, SampleMode mode, Target target) {
  const auto train_set = view_samples(b, View::train, mode, target);
  const auto val_set = view_samples(b, View::val2, mode, target);
  nn::UNet<float> net(net_spec_for(cfg, target), hash_seed(cfg.seed, 0x4e37u));
  // Saturation nets start from a constant output at the mean training target.
  // The tanhshrink head is flat at zero, so pressure nets keep their random head.
  if (target == Target::saturation) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& smp : train_set) {
      for (float v : smp.target) sum += v;
      n += smp.target.size();
    }
    const double mean = std::clamp(sum / static_cast<double>(n), 1e-3, 1.0 - 1e-3);
    net.reset_head(static_cast<float>(std::log(mean / (1.0 - mean))));
  }
  TrainSummary s;
  s.result = nn::train(net, train_set, val_set, static_cast<int>(b.grid.ny), static_cast<int>(b.grid.nx),
                       train_config_for(cfg, mode));
  net.params() = s.result.params;
  s.model = cfg.model_path(mode, target);
  s.history = cfg.history_path(mode, target);
  json meta = {{"mode", to_string(mode)},
               {"target", to_string(target)},
               {"best_epoch", s.result.best_epoch},
               {"best_val_mae", s.result.best_val},
               {"resolution", {b.grid.nx, b.grid.ny}}};
  nn::write_net(net, s.model, meta);
  io::write_text(s.history, nn::history_csv(s.result.history));
  return s;
}

inline TrainSummary cmd_train(const RunConfig& cfg, SampleMode mode, Target target) {
  return train_model(cfg, load_dataset(cfg), mode, target);
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalSummary {
  std::vector<CurveRow> rows;
  std::vector<DiffRow> diffs;
  std::vector<std::string> divergences;
  std::vector<std::string> written;
};

inline Predictor net_predictor(const nn::UNet<float>& net, const DatasetBundle& b) {
  const int h = static_cast<int>(b.grid.ny);
  const int w = static_cast<int>(b.grid.nx);
  return [&net, h, w](std::span<const float> x) { return nn::predict(net, x, h, w); };
}

inline std::optional<nn::UNet<float>> load_model(const RunConfig& cfg, SampleMode mode, Target target) {
  const auto path = cfg.model_path(mode, target);
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto loaded = nn::read_net<float>(path);
  return std::move(loaded.net);
}

struct EvalRequest {
  std::vector<Target> targets{Target::saturation, Target::pressure};
  int first_step = 0;  // 0 = config
  int last_step = 0;
  std::optional<std::filesystem::path> predictions;  // external prediction files to score
  bool write_predictions = true;
};

inline std::vector<int> step_range(int a, int b) {
  std::vector<int> s;
  for (int k = a; k <= b; ++k) s.push_back(k);
  return s;
}

namespace detail {

inline void write_plots(const RunConfig& cfg, const DatasetBundle& b, Target target, const EvalSummary& s,
                        std::vector<std::string>& written) {
  const auto means = mean_curves(s.rows);
  std::vector<PlotSeries> mae;
  for (const char* model : {"static", "auto", "auto_one_step"}) {
    PlotSeries p{model, {}, {}};
    for (const auto& r : means) {
      if (r.model == model && r.target == target) {
        p.x.push_back(r.step);
        p.y.push_back(r.mae_norm);
      }
    }
    if (!p.x.empty()) mae.push_back(p);
  }
  const double marker = b.manifest.t_train + 0.5;
  const std::string t = to_string(target);
  auto emit = [&](const std::string& name, const std::string& svg) {
    io::write_text(cfg.eval_dir() / name, svg);
    written.push_back(name);
  };
  if (!mae.empty()) emit(t + "_mae.svg", svg_line_plot(t + ": mean MAE per step", mae, marker));

  std::vector<DiffRow> rows;
  for (const auto& d : s.diffs) {
    if (d.target == target) rows.push_back(d);
  }
  if (rows.empty()) return;
  PlotSeries mean{"mean auto - static", {}, {}};
  for (const auto& d : mean_diff(rows)) {
    mean.x.push_back(d.step);
    mean.y.push_back(d.diff_norm);
  }
  emit(t + "_diff_mean.svg", svg_line_plot(t + ": auto - static MAE (mean)", {mean}, marker));

  std::vector<std::uint32_t> ids;
  for (const auto& d : rows) {
    if (std::find(ids.begin(), ids.end(), d.sim_id) == ids.end()) ids.push_back(d.sim_id);
  }
  CounterRng rng(hash_seed(cfg.seed, 0x9107u));
  shuffle(ids, rng);
  ids.resize(std::min<std::size_t>(ids.size(), static_cast<std::size_t>(std::max(cfg.plot_sims, 0))));
  std::sort(ids.begin(), ids.end());
  std::vector<PlotSeries> per_sim;
  for (auto id : ids) {
    PlotSeries p{"sim " + std::to_string(id), {}, {}};
    for (const auto& d : rows) {
      if (d.sim_id == id) {
        p.x.push_back(d.step);
        p.y.push_back(d.diff_norm);
      }
    }
    per_sim.push_back(p);
  }
  if (!per_sim.empty()) emit(t + "_diff_sims.svg", svg_line_plot(t + ": auto - static MAE per simulation", per_sim, marker));
}

}  // namespace detail

inline EvalSummary evaluate(const RunConfig& cfg, const DatasetBundle& b, const EvalRequest& req) {
  const int first = req.first_step > 0 ? req.first_step : cfg.eval_first_step;
  const int last = req.last_step > 0 ? req.last_step : (cfg.eval_last_step > 0 ? cfg.eval_last_step : b.n_steps());
  if (first < 1 || last < first) throw ConfigError("steps must satisfy 1 <= A <= B");
  if (last > b.n_steps()) {
    throw ConfigError("step " + std::to_string(last) + " beyond the dataset horizon of " + std::to_string(b.n_steps()));
  }
  const auto steps = step_range(first, last);
  const auto& sims = cfg.eval_view == "test" ? b.manifest.test : b.manifest.val_geo;
  const auto pred_dir = cfg.eval_dir() / "predictions";

  EvalSummary s;
  for (Target target : req.targets) {
    const auto static_net = load_model(cfg, SampleMode::static_time, target);
    const auto auto_net = load_model(cfg, SampleMode::autoregressive, target);
    std::vector<CurveRow> static_rows;
    std::vector<CurveRow> auto_rows;
    for (int sim : sims) {
      const auto id = b.sims[static_cast<std::size_t>(sim)].id;
      if (static_net) {
        const auto pred = static_series(b, sim, net_predictor(*static_net, b), steps);
        auto rows = score_series(b, sim, target, "static", steps, pred);
        static_rows.insert(static_rows.end(), rows.begin(), rows.end());
        if (req.write_predictions) {
          write_sim(make_prediction_file(b, sim, target, SampleMode::static_time, steps, pred),
                    pred_dir / ("static_" + std::string(to_string(target)) + "_" + field_name(id) + ".sim"));
        }
      }
      if (auto_net) {
        const auto model = net_predictor(*auto_net, b);
        std::vector<std::vector<float>> one_step;
        for (int k : steps) one_step.push_back(model(assemble_sample(b, sim, k, SampleMode::autoregressive, target).input));
        auto rows = score_series(b, sim, target, "auto_one_step", steps, one_step);
        s.rows.insert(s.rows.end(), rows.begin(), rows.end());
        try {
          const auto all = autoregressive_rollout(b, sim, target, model, target_field(b, sim, 0, target), last);
          const std::vector<std::vector<float>> pred(all.begin() + (first - 1), all.end());
          auto rrows = score_series(b, sim, target, "auto", steps, pred);
          auto_rows.insert(auto_rows.end(), rrows.begin(), rrows.end());
          if (req.write_predictions) {
            write_sim(make_prediction_file(b, sim, target, SampleMode::autoregressive, steps, pred),
                      pred_dir / ("auto_" + std::string(to_string(target)) + "_" + field_name(id) + ".sim"));
          }
        } catch (const NumericalError& e) {
          s.divergences.push_back(field_name(id) + " " + to_string(target) + ": " + e.what());
        }
      }
    }
    s.rows.insert(s.rows.end(), static_rows.begin(), static_rows.end());
    s.rows.insert(s.rows.end(), auto_rows.begin(), auto_rows.end());
    if (!static_rows.empty() && auto_rows.size() == static_rows.size()) {
      const auto d = diff_curve(auto_rows, static_rows);
      s.diffs.insert(s.diffs.end(), d.begin(), d.end());
    }
  }

  if (req.predictions) {
    for (const auto& p : list_files(*req.predictions, ".sim")) {
      const auto parsed = parse_prediction(read_sim(p), b);
      if (std::find(req.targets.begin(), req.targets.end(), parsed.target) == req.targets.end()) continue;
      auto rows = score_series(b, parsed.sim, parsed.target, "ext_" + parsed.mode, parsed.steps, parsed.fields);
      s.rows.insert(s.rows.end(), rows.begin(), rows.end());
    }
  }
  return s;
}

inline EvalSummary cmd_eval(const RunConfig& cfg, const EvalRequest& req = {}) {
  const auto b = load_dataset(cfg);
  bool any_model = req.predictions.has_value();
  for (Target t : req.targets) {
    for (SampleMode m : {SampleMode::static_time, SampleMode::autoregressive}) {
      any_model = any_model || std::filesystem::exists(cfg.model_path(m, t));
    }
  }
  if (!any_model) throw DependencyError("no trained models in " + cfg.model_dir().string() + " (run train first)");
  auto s = evaluate(cfg, b, req);
  std::filesystem::create_directories(cfg.eval_dir());
  io::write_text(cfg.eval_dir() / "mae_curve.csv", mae_curve_csv(s.rows, mean_curves(s.rows)));
  io::write_text(cfg.eval_dir() / "diff_curve.csv", diff_curve_csv(s.diffs, mean_diff(s.diffs)));
  s.written = {"mae_curve.csv", "diff_curve.csv"};
  if (cfg.svg) {
    for (Target t : req.targets) detail::write_plots(cfg, b, t, s, s.written);
  }
  io::write_text(cfg.eval_dir() / "divergence.txt", [&] {
    std::string text;
    for (const auto& d : s.divergences) text += d + "\n";
    return text;
  }());
  return s;
}

inline std::vector<std::pair<std::uint32_t, std::vector<CycleMetrics>>> cmd_metrics(const RunConfig& cfg) {
  const auto sims = list_files(cfg.sim_dir(), ".sim");
  if (sims.empty()) throw DependencyError("no .sim files in " + cfg.sim_dir().string() + " (run simulate first)");
  std::vector<std::pair<std::uint32_t, std::vector<CycleMetrics>>> out;
  for (const auto& p : sims) out.emplace_back(field_id(p), compute_uhs_metrics(read_sim(p)));
  std::filesystem::create_directories(cfg.eval_dir());
  io::write_text(cfg.eval_dir() / "metrics.csv", metrics_csv(out));
  return out;
}

}  // namespace uhs
