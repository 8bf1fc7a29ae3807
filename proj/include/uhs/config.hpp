#pragma once

// Run configuration: one JSON document, merged over a scale preset.
//
// Top-level keys (all optional; preset values fill the rest):
//   version, scale ("desk" | "paper"), seed, workers, out_dir,
//   grid, field {..., fluvial_fraction}, fluids, relperm,
//   schedule  either {cycles, injection_rate, injection_bhp_bar,
//             withdrawal_bhp_bar, cushion_months, cushion_rate} or an explicit
//             {preamble, cycle, cycles} stage list,
//   simulation, dataset {n_sims, downsample_factor, ratios [train, val, test]},
//   network {levels, width}, training {...}, eval {view, steps, plot_sims, svg}

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "uhs/dataset.hpp"
#include "uhs/json_conv.hpp"
#include "uhs/nn/train.hpp"
#include "uhs/nn/unet.hpp"

namespace uhs {

inline constexpr int kConfigVersion = 1;

/// Invalid or inconsistent configuration (CLI exit code 1).
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct RunConfig {
  std::string scale = "desk";
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path out_dir = "run";
  GridSpec grid;
  FieldParams field;
  double fluvial_fraction = 0.0;
  FluidProps fluids;
  RelPermModel relperm;
  Schedule schedule;
  SimConfig sim;
  int n_sims = 20;
  int downsample_factor = 2;
  SplitRatios ratios;
  nn::NetSpec net;
  nn::TrainConfig train;
  std::string eval_view = "val_geo";  // val_geo | test
  int eval_first_step = 1;
  int eval_last_step = 0;  // 0 = dataset horizon
  int plot_sims = 5;
  bool svg = true;
  json document;  // the merged configuration

  std::filesystem::path geo_dir() const { return out_dir / "geo"; }
  std::filesystem::path sim_dir() const { return out_dir / "sim"; }
  std::filesystem::path dataset_path() const { return out_dir / "dataset.uhsd"; }
  std::filesystem::path model_dir() const { return out_dir / "models"; }
  std::filesystem::path eval_dir() const { return out_dir / "eval"; }
  std::filesystem::path model_path(SampleMode m, Target t) const {
    return model_dir() / (std::string(to_string(m)) + "_" + to_string(t) + ".net");
  }
  std::filesystem::path history_path(SampleMode m, Target t) const {
    return model_dir() / (std::string(to_string(m)) + "_" + to_string(t) + "_history.csv");
  }

  /// Field parameters of simulation i: seed hash(master, i); fluvial for a
  /// seeded fraction of the fields.
  FieldParams field_for(std::size_t i) const {
    FieldParams p = field;
    p.seed = hash_seed(seed, i);
    if (fluvial_fraction > 0.0) {
      CounterRng rng(hash_seed(seed ^ 0x5a17u, i));
      p.kind = rng.uniform() < fluvial_fraction ? FieldKind::fluvial : FieldKind::gaussian;
    }
    return p;
  }
};

// ---------------------------------------------------------------------------
// Presets

/// 64 x 64 over the 7680 m square, three annual cycles, 2x downsampling.
inline json desk_preset() {
  return json::parse(R"({
    "version": 1,
    "scale": "desk",
    "seed": 20240601,
    "workers": 1,
    "out_dir": "run",
    "grid": {"nx": 64, "ny": 64, "dx": 120.0, "dy": 120.0, "thickness": 100.0},
    "field": {"kind": "gaussian", "log_perm_mean": 4.605170185988092, "log_perm_std": 0.5,
              "corr_length_x": 700.0, "corr_length_y": 700.0,
              "porosity_a": 0.10, "porosity_b": 0.05, "fluvial_fraction": 0.0,
              "channel_count": 4, "channel_width": 360.0, "channel_amplitude": 600.0,
              "channel_wavelength": 4000.0, "channel_perm": 1000.0, "background_perm": 20.0},
    "schedule": {"cycles": 3, "injection_rate": 10.0, "injection_bhp_bar": 200.0,
                 "withdrawal_bhp_bar": 60.0, "cushion_months": 0.0, "cushion_rate": 0.0},
    "simulation": {"time_step_days": 1.0, "output_interval_months": 2.0,
                   "initial_pressure_bar": 80.0, "initial_gas_saturation": 0.3},
    "dataset": {"n_sims": 20, "downsample_factor": 2, "ratios": [0.70, 0.15, 0.15]},
    "network": {"levels": 3, "width": 16},
    "training": {"batch_size": 4, "learning_rate": 0.001, "halving_period": 25,
                 "max_epochs": 60, "patience": 10, "validation_cadence": 5,
                 "l2": 1e-5, "optimizer": "adam"},
    "eval": {"view": "val_geo", "first_step": 1, "last_step": 0, "plot_sims": 5, "svg": true}
  })");
}

/// 256 x 256, ten annual cycles, 4x downsampling to 64, the training
/// constants of the reference protocol.
inline json paper_preset() {
  json j = desk_preset();
  j.merge_patch(json::parse(R"({
    "scale": "paper",
    "grid": {"nx": 256, "ny": 256, "dx": 30.0, "dy": 30.0},
    "schedule": {"cycles": 10},
    "dataset": {"n_sims": 1000, "downsample_factor": 4},
    "network": {"width": 64},
    "training": {"batch_size": 64, "learning_rate": 0.0001, "max_epochs": 200,
                 "validation_cadence": 10}
  })"));
  return j;
}

inline json preset(const std::string& scale) {
  if (scale == "desk") return desk_preset();
  if (scale == "paper") return paper_preset();
  throw ConfigError("unknown scale '" + scale + "' (expected desk|paper)");
}

// ---------------------------------------------------------------------------
// Parsing

inline Schedule schedule_from_config(const json& j) {
  if (j.contains("cycle")) return schedule_from_json(j);
  return default_schedule(j.value("cycles", 3), j.value("injection_rate", 10.0), j.value("injection_bhp_bar", 200.0),
                          j.value("withdrawal_bhp_bar", 60.0), j.value("cushion_months", 0.0),
                          j.value("cushion_rate", 0.0));
}

inline nn::TrainConfig train_config_from(const json& j, std::uint64_t seed, int workers) {
  nn::TrainConfig t;
  detail::read_if(j, "batch_size", t.batch_size);
  detail::read_if(j, "learning_rate", t.learning_rate);
  detail::read_if(j, "halving_period", t.halving_period);
  detail::read_if(j, "max_epochs", t.max_epochs);
  detail::read_if(j, "patience", t.patience);
  detail::read_if(j, "validation_cadence", t.validation_cadence);
  detail::read_if(j, "l2", t.l2);
  detail::read_if(j, "max_steps", t.max_steps);
  if (j.contains("optimizer")) t.optimizer = nn::optimizer_from_string(j["optimizer"].get<std::string>());
  t.seed = j.value("seed", hash_seed(seed, 0x7a11u));
  t.workers = workers;
  return t;
}

/// Builds and validates a RunConfig from a merged document.
inline RunConfig run_config_from_json(const json& doc) {
  RunConfig c;
  try {
    if (doc.value("version", kConfigVersion) != kConfigVersion) {
      throw ConfigError("unsupported config version " + doc["version"].dump());
    }
    c.document = doc;
    c.scale = doc.value("scale", std::string("desk"));
    c.seed = doc.value("seed", std::uint64_t{0});
    c.workers = doc.value("workers", 1);
    c.out_dir = doc.value("out_dir", std::string("run"));
    update_grid(doc.value("grid", json::object()), c.grid);
    const auto field = doc.value("field", json::object());
    update_field(field, c.field);
    c.fluvial_fraction = field.value("fluvial_fraction", 0.0);
    update_fluids(doc.value("fluids", json::object()), c.fluids);
    update_relperm(doc.value("relperm", json::object()), c.relperm);
    c.schedule = schedule_from_config(doc.value("schedule", json::object()));
    update_sim_config(doc.value("simulation", json::object()), c.sim);
    const auto ds = doc.value("dataset", json::object());
    c.n_sims = ds.value("n_sims", 20);
    c.downsample_factor = ds.value("downsample_factor", 1);
    if (ds.contains("ratios")) {
      const auto r = ds["ratios"].get<std::vector<double>>();
      if (r.size() != 3) throw ConfigError("dataset.ratios needs three entries");
      c.ratios = {r[0], r[1], r[2]};
    }
    const auto net = doc.value("network", json::object());
    c.net.levels = net.value("levels", 3);
    c.net.width = net.value("width", 16);
    c.net.in_channels = kInputChannels;
    c.train = train_config_from(doc.value("training", json::object()), c.seed, c.workers);
    const auto ev = doc.value("eval", json::object());
    c.eval_view = ev.value("view", std::string("val_geo"));
    c.eval_first_step = ev.value("first_step", 1);
    c.eval_last_step = ev.value("last_step", 0);
    c.plot_sims = ev.value("plot_sims", 5);
    c.svg = ev.value("svg", true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  try {
    c.grid.validate();
    FieldParams probe = c.field;
    validate(probe, c.grid);
    if (c.fluvial_fraction > 0.0) {
      probe.kind = FieldKind::fluvial;
      validate(probe, c.grid);
    }
    c.fluids.validate();
    c.relperm.validate();
    c.schedule.validate();
    c.sim.validate();
    c.net.validate();
    c.train.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!(c.fluvial_fraction >= 0.0 && c.fluvial_fraction <= 1.0)) throw ConfigError("field.fluvial_fraction outside [0, 1]");
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (c.n_sims < 0) throw ConfigError("dataset.n_sims must be >= 0");
  if (c.downsample_factor < 1 || c.grid.nx % static_cast<std::size_t>(c.downsample_factor) != 0 ||
      c.grid.ny % static_cast<std::size_t>(c.downsample_factor) != 0) {
    throw ConfigError("dataset.downsample_factor must divide the grid");
  }
  const std::size_t m = std::size_t{1} << c.net.levels;
  const auto f = static_cast<std::size_t>(c.downsample_factor);
  if ((c.grid.nx / f) % m != 0 || (c.grid.ny / f) % m != 0) {
    throw ConfigError("dataset resolution must be divisible by 2^levels");
  }
  if (c.eval_view != "val_geo" && c.eval_view != "test") throw ConfigError("eval.view must be val_geo or test");
  if (c.eval_first_step < 1 || (c.eval_last_step != 0 && c.eval_last_step < c.eval_first_step)) {
    throw ConfigError("eval steps must satisfy 1 <= first <= last");
  }
  return c;
}

struct ConfigOverrides {
  std::optional<std::string> scale;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

/// preset(scale) <- file <- overrides. The scale comes from the override,
/// else the file, else "desk".
inline RunConfig load_run_config(const std::optional<std::filesystem::path>& path, const ConfigOverrides& o = {}) {
  json file = json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config " + path->string());
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config " + path->string() + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config root must be an object");
  }
  const std::string scale = o.scale ? *o.scale : file.value("scale", std::string("desk"));
  json doc = preset(scale);
  doc.merge_patch(file);
  doc["scale"] = scale;
  if (o.workers) doc["workers"] = *o.workers;
  if (o.seed) doc["seed"] = *o.seed;
  if (o.out_dir) doc["out_dir"] = *o.out_dir;
  return run_config_from_json(doc);
}

}  // namespace uhs
