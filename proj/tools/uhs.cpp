// uhs: field generation, batch simulation, dataset build, training,
// evaluation and metric export for one run directory.
//
// Exit codes: 0 success, 1 config error, 2 runtime failure, 3 partial batch
// failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "uhs/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kPartial = 3 };

std::pair<int, int> parse_steps(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const int k = std::stoi(s);
      return {k, k};
    }
    return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
  } catch (const std::exception&) {
    throw uhs::ConfigError("--steps expects A..B, got '" + s + "'");
  }
}

int report_batch(const char* what, const uhs::BatchReport& r) {
  std::printf("%s: %zu ok, %zu failed\n", what, r.done.size(), r.failed.size());
  for (const auto& f : r.failed) std::fprintf(stderr, "  %s: %s\n", f.item.c_str(), f.message.c_str());
  return r.failed.empty() ? kOk : kPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Underground hydrogen storage simulation and surrogate benchmark"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  uhs::ConfigOverrides over;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--workers", over.workers, "parallel workers")->check(CLI::PositiveNumber);
  app.add_option("--seed", over.seed, "master seed");
  app.add_option("--scale", over.scale, "preset scale")->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--out", over.out_dir, "run directory (overrides out_dir)");

  auto* gen = app.add_subcommand("gen", "generate porosity/permeability fields");
  std::optional<int> count;
  gen->add_option("-n,--count", count, "number of fields (default dataset.n_sims)")->check(CLI::NonNegativeNumber);

  app.add_subcommand("simulate", "simulate every generated field");
  app.add_subcommand("dataset", "build the learning dataset from simulations");

  auto* train = app.add_subcommand("train", "train surrogate models");
  std::string mode = "all";
  std::string target = "all";
  train->add_option("--mode", mode, "static|auto|all")->check(CLI::IsMember({"static", "auto", "all"}));
  train->add_option("--target", target, "saturation|pressure|all")
      ->check(CLI::IsMember({"saturation", "pressure", "all"}));

  auto* eval = app.add_subcommand("eval", "evaluate trained models and prediction files");
  std::string eval_target = "all";
  std::optional<std::string> steps;
  std::optional<std::string> predictions;
  bool no_predictions = false;
  eval->add_option("--target", eval_target, "saturation|pressure|all")
      ->check(CLI::IsMember({"saturation", "pressure", "all"}));
  eval->add_option("--steps", steps, "step range A..B");
  eval->add_option("--predictions", predictions, "directory of prediction files to score");
  eval->add_flag("--no-write-predictions", no_predictions, "do not write model prediction files");

  app.add_subcommand("metrics", "storage metrics from simulation well records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  uhs::RunConfig cfg;
  try {
    cfg = uhs::load_run_config(config_path ? std::optional<std::filesystem::path>(*config_path) : std::nullopt, over);
  } catch (const uhs::Error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "gen") return report_batch("gen", uhs::cmd_gen(cfg, count.value_or(cfg.n_sims)));
    if (name == "simulate") return report_batch("simulate", uhs::cmd_simulate(cfg));
    if (name == "dataset") {
      const auto b = uhs::cmd_dataset(cfg);
      std::printf("dataset: %zu sims, %dx%zu cells, %d steps, T_train %d -> %s\n", b.sims.size(),
                  static_cast<int>(b.grid.nx), b.grid.ny, b.n_steps(), b.manifest.t_train,
                  cfg.dataset_path().string().c_str());
      return kOk;
    }
    if (name == "train") {
      const auto bundle = uhs::load_dataset(cfg);
      for (const char* m : {"static", "auto"}) {
        if (mode != "all" && mode != m) continue;
        for (const char* t : {"saturation", "pressure"}) {
          if (target != "all" && target != t) continue;
          const auto s = uhs::train_model(cfg, bundle, uhs::sample_mode_from_string(m), uhs::target_from_string(t));
          std::printf("train %s/%s: %zu epochs, %ld steps, best val MAE %.6g at epoch %d -> %s\n", m, t,
                      s.result.history.size(), s.result.steps, s.result.best_val, s.result.best_epoch,
                      s.model.string().c_str());
        }
      }
      return kOk;
    }
    if (name == "eval") {
      uhs::EvalRequest req;
      if (eval_target != "all") req.targets = {uhs::target_from_string(eval_target)};
      if (steps) std::tie(req.first_step, req.last_step) = parse_steps(*steps);
      if (predictions) req.predictions = *predictions;
      req.write_predictions = !no_predictions;
      const auto s = uhs::cmd_eval(cfg, req);
      std::printf("eval: %zu curve rows, %zu difference rows -> %s\n", s.rows.size(), s.diffs.size(),
                  cfg.eval_dir().string().c_str());
      for (const auto& d : s.divergences) std::fprintf(stderr, "  diverged: %s\n", d.c_str());
      return s.divergences.empty() ? kOk : kPartial;
    }
    if (name == "metrics") {
      const auto m = uhs::cmd_metrics(cfg);
      std::printf("metrics: %zu simulations -> %s\n", m.size(), (cfg.eval_dir() / "metrics.csv").string().c_str());
      return kOk;
    }
  } catch (const uhs::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s failed: %s\n", name.c_str(), e.what());
    return kRuntime;
  }
  return kRuntime;
}
