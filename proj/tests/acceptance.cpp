// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <zlib.h>

#include "gradcheck.hpp"
#include "uhs/pipeline.hpp"

namespace uhs {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunConfig desk_config(const std::filesystem::path& out) {
  auto doc = desk_preset();
  doc["out_dir"] = out.string();
  doc["workers"] = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  // Narrower net and fewer epochs than the desk defaults to bound the run time.
  doc["network"]["width"] = 8;
  doc["training"]["max_epochs"] = 30;
  return run_config_from_json(doc);
}

// ---------------------------------------------------------------------------
// 1. Conservation over a full desk run, plus the per-step solver residual (2).

struct DeskRun {
  SnapshotSeries series;
  GeoModel geo;
  RunConfig cfg;
  double seconds = 0.0;
};

DeskRun& desk_run() {
  static DeskRun run = [] {
    DeskRun r;
    r.cfg = run_config_from_json(desk_preset());
    r.geo = make_field(r.cfg, 0);
    const auto t0 = std::chrono::steady_clock::now();
    r.series = simulate_field(r.cfg, r.geo);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Outcome conservation() {
  const auto& r = desk_run();
  const auto& snaps = r.series.snapshots;
  const auto m0 = component_masses(snaps.front(), r.geo, r.cfg.fluids, r.cfg.sim);
  const auto& last = snaps.back().wells;
  const double injected = last.injected[kH2] + last.injected[kCushion] + last.injected[kWater];
  double err = 0.0;
  double clamp = 0.0;
  for (const auto& s : snaps) {
    const auto m = component_masses(s, r.geo, r.cfg.fluids, r.cfg.sim);
    for (int k = 0; k < kComponents; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      err = std::max(err, std::abs((m[kk] - m0[kk]) - s.wells.net(k) - s.clamp_residual[kk]) / injected);
      clamp = std::max(clamp, std::abs(s.clamp_residual[kk]) / injected);
    }
  }
  const bool outputs = snaps.size() == 19;
  return {outputs && injected > 0.0 && err <= 1e-9 && clamp <= 1e-6 && r.seconds <= 30.0,
          std::to_string(snaps.size() - 1) + " outputs, mass error " + fmt("%.2e", err) + " (<= 1e-9), clamp " +
              fmt("%.2e", clamp) + " (<= 1e-6), runtime " + fmt("%.1f", r.seconds) + " s (<= 30 s)"};
}

// ---------------------------------------------------------------------------
// 2. Pressure solver

Outcome pressure_oracle() {
  // 2 x 2 cells, heterogeneous permeability, uniform saturation, shut-in well.
  const GridSpec g{2, 2, 50.0, 40.0, 10.0, 0.0, 0.0};
  const GeoModel geo{g, {0.2, 0.2, 0.2, 0.2}, {100.0, 200.0, 50.0, 400.0}};
  const FluidProps fluids;
  const RelPermModel relperm;
  const SimConfig config;
  SimState s;
  s.pressure = {100e5, 90e5, 85e5, 80e5};
  s.gas_saturation.assign(4, 0.4);
  s.h2_fraction.assign(4, 0.5);
  const double dt = units::day;
  const auto sys = assemble_pressure_system(s, geo, build_faces(geo), cell_props(s, fluids, relperm), WellTerm{}, 0,
                                            fluids, config, dt);

  const auto kr = rel_perms(0.4, relperm);
  const double lambda = kr.water / fluids.water_viscosity + kr.gas / gas_viscosity(0.5, fluids);
  auto trans = [&](double ka, double kb, double area, double dist) {
    return 2.0 * ka * kb / (ka + kb) * units::millidarcy * area / dist * lambda;
  };
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs;
  auto link = [&](int i, int j, double t) {
    a(i, i) += t;
    a(j, j) += t;
    a(i, j) -= t;
    a(j, i) -= t;
  };
  link(0, 1, trans(100.0, 200.0, 40.0 * 10.0, 50.0));
  link(2, 3, trans(50.0, 400.0, 40.0 * 10.0, 50.0));
  link(0, 2, trans(100.0, 50.0, 50.0 * 10.0, 40.0));
  link(1, 3, trans(200.0, 400.0, 50.0 * 10.0, 40.0));
  const double v = 50.0 * 40.0 * 10.0;
  for (int c = 0; c < 4; ++c) {
    const double p = s.pressure[static_cast<std::size_t>(c)];
    const double pv = v * 0.2 * (1.0 + config.rock_compressibility * (p - config.initial_pressure * units::bar));
    const double acc = (v * 0.2 * config.rock_compressibility + pv * 0.4 / p) / dt;
    a(c, c) += acc;
    rhs[c] = acc * p;
  }
  const Eigen::MatrixXd dense(sys.matrix);
  const double assembly = (dense - a).norm() / a.norm();
  const double rhs_err = (sys.rhs - rhs).norm() / rhs.norm();
  const Eigen::Vector4d exact = a.fullPivLu().solve(rhs);
  const auto sol = solve_pressure(sys, 1e-14);
  const double solve_err = (sol.pressure - exact).norm() / exact.norm();
  const double step_residual = desk_run().series.diagnostics.max_pressure_residual;
  return {assembly <= 1e-12 && rhs_err <= 1e-12 && solve_err <= 1e-12 && step_residual <= 1e-10,
          "2x2 assembly " + fmt("%.1e", assembly) + ", solution " + fmt("%.1e", solve_err) +
              " (<= 1e-12); desk run max step residual " + fmt("%.1e", step_residual) + " (<= 1e-10)"};
}

// ---------------------------------------------------------------------------
// 3. Symmetry: 65 x 65 homogeneous field, well at the centre cell.

double rotation_mismatch(const std::vector<double>& f, std::size_t n) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = f[j * n + i];
      const double b = f[i * n + (n - 1 - j)];  // rotated by 90 degrees
      diff = std::max(diff, std::abs(a - b));
      scale = std::max(scale, std::abs(a));
    }
  }
  return diff / scale;
}

Outcome symmetry() {
  auto cfg = run_config_from_json(desk_preset());
  cfg.grid.nx = cfg.grid.ny = 65;
  const GeoModel geo{cfg.grid, std::vector<double>(cfg.grid.cell_count(), 0.2),
                     std::vector<double>(cfg.grid.cell_count(), 100.0)};
  const auto series = simulate_field(cfg, geo);
  double worst = 0.0;
  for (const auto& s : series.snapshots) {
    worst = std::max({worst, rotation_mismatch(s.gas_saturation, 65), rotation_mismatch(s.pressure, 65)});
  }
  return {worst <= 1e-6, std::to_string(series.snapshots.size()) + " snapshots, max relative rotation mismatch " +
                             fmt("%.2e", worst) + " (<= 1e-6)"};
}

// ---------------------------------------------------------------------------
// 4. Temporal self-convergence

Outcome self_convergence() {
  const GridSpec g{32, 32, 120.0, 120.0, 100.0, 0.0, 0.0};
  FieldParams p;
  p.seed = 11;
  p.log_perm_std = 0.5;
  p.corr_length_x = p.corr_length_y = 700.0;
  const auto geo = gen_gaussian_field(p, g);
  Schedule sched;
  sched.preamble.push_back({StageKind::inject_h2, 60.0 * units::day, {ControlKind::mass_rate, 10.0, 200.0}, 1.0});
  std::vector<std::vector<double>> finals;
  const std::vector<double> steps{2.0, 1.0, 0.5, 0.25};
  for (double dt : steps) {
    SimConfig c;
    c.time_step = dt * units::day;
    c.output_interval = 60.0 * units::day;
    finals.push_back(run_simulation(geo, sched, c, FluidProps{}, RelPermModel{}).snapshots.back().gas_saturation);
  }
  std::vector<double> d;
  for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
    double sum = 0.0;
    for (std::size_t c = 0; c < finals[k].size(); ++c) sum += std::abs(finals[k][c] - finals[k + 1][c]);
    d.push_back(sum);
  }
  const double r1 = d[0] / d[1];
  const double r2 = d[1] / d[2];
  return {r1 >= 1.7 && r2 >= 1.7, "dt 2/1/0.5/0.25 days, L1 change ratios " + fmt("%.2f", r1) + ", " +
                                      fmt("%.2f", r2) + " (>= 1.7)"};
}

// ---------------------------------------------------------------------------
// 5. Gradients

Outcome gradients() {
  auto reports = test::check_layers();
  reports.push_back(test::check_net(nn::Head::sigmoid, 21));
  reports.push_back(test::check_net(nn::Head::tanhshrink, 22));
  double worst = 0.0;
  bool ok = true;
  std::string worst_name;
  for (const auto& r : reports) {
    if (r.rel_error > worst) {
      worst = r.rel_error;
      worst_name = r.name;
    }
    ok = ok && r.rel_error <= 1e-4 && r.checked > 9 * r.skipped;
  }
  return {ok, std::to_string(reports.size()) + " checks, worst " + worst_name + " " + fmt("%.2e", worst) +
                  " (<= 1e-4, binary64, eps 1e-3)"};
}

// ---------------------------------------------------------------------------
// 6-9 use one generated desk dataset.

struct DeskData {
  RunConfig cfg;
  DatasetBundle bundle;
};

DeskData& desk_data() {
  static DeskData d = [] {
    DeskData r;
    const auto dir = std::filesystem::temp_directory_path() / "uhs_acceptance";
    std::filesystem::remove_all(dir);
    r.cfg = desk_config(dir);
    const auto gen = cmd_gen(r.cfg, r.cfg.n_sims);
    const auto sim = cmd_simulate(r.cfg);
    if (!gen.failed.empty() || !sim.failed.empty()) throw NumericalError("desk dataset generation had failures");
    r.bundle = cmd_dataset(r.cfg);
    return r;
  }();
  return d;
}

Outcome overfit() {
  const auto& d = desk_data();
  const auto& b = d.bundle;
  auto all = view_samples(b, View::train, SampleMode::static_time, Target::pressure);
  const std::vector<Sample> four{all[0], all[5], all[17], all[40]};
  nn::UNet<float> net(net_spec_for(d.cfg, Target::pressure), 5);
  nn::TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.learning_rate = d.cfg.train.learning_rate;
  cfg.halving_period = 1000;
  cfg.max_epochs = 500;
  cfg.patience = 500;
  cfg.validation_cadence = 500;
  cfg.l2 = 0.0;
  const int h = static_cast<int>(b.grid.ny);
  const int w = static_cast<int>(b.grid.nx);
  const auto r = nn::train(net, four, four, h, w, cfg);
  const double initial = r.history.front().train_mae;
  double best = initial;
  for (const auto& row : r.history) best = std::min(best, row.train_mae);
  return {r.steps <= 500 && best < 0.1 * initial, std::to_string(r.steps) + " steps, MAE " + fmt("%.4f", initial) +
                                                      " -> " + fmt("%.5f", best) + " (< 10% of initial)"};
}

Outcome protocol() {
  const auto& d = desk_data();
  const auto& b = d.bundle;
  const auto& m = b.manifest;
  std::vector<std::string> bad;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) bad.push_back(what);
  };

  check(m.train.size() == 14 && m.val_geo.size() == 3 && m.test.size() == 3, "split sizes 14/3/3");
  std::set<int> all(m.train.begin(), m.train.end());
  all.insert(m.val_geo.begin(), m.val_geo.end());
  all.insert(m.test.begin(), m.test.end());
  check(all.size() == 20 && *all.begin() == 0 && *all.rbegin() == 19, "splits partition the sims");
  check(m.n_steps == 18 && m.t_train == 12, "18 steps, T_train 12");

  const double t_end = m.t_train * b.output_interval;
  bool boundary = false;
  double t = 0.0;
  for (const auto& st : b.schedule.stages()) {
    t += st.duration;
    boundary = boundary || std::abs(t - t_end) <= 1e-6 * t_end;
  }
  check(boundary, "T_train at a stage boundary");

  auto expect_view = [&](View v, const std::vector<int>& sims, int first, int last) {
    std::vector<SampleRef> want;
    for (int s : sims) {
      for (int k = first; k <= last; ++k) want.push_back({s, k});
    }
    check(m.view(v) == want, std::string("view ") + to_string(v));
  };
  expect_view(View::train, m.train, 1, m.t_train);
  expect_view(View::val1, m.train, m.t_train + 1, m.n_steps);
  expect_view(View::val2, m.val_geo, 1, m.t_train);
  expect_view(View::val3, m.val_geo, m.t_train + 1, m.n_steps);

  // Channels recomputed directly from the stored fields.
  const std::size_t n = b.cells();
  const std::size_t nx = b.grid.nx;
  const std::size_t well = (b.grid.ny / 2) * nx + nx / 2;
  const int pattern[6] = {1, 1, 1, -1, -1, -1};
  for (int s : {m.train[0], m.val_geo[0]}) {
    const auto& rec = b.sims[static_cast<std::size_t>(s)];
    for (int k = 1; k <= m.n_steps; ++k) {
      const auto x = assemble_sample(b, s, k, SampleMode::static_time, Target::saturation).input;
      for (std::size_t c = 0; c < n; ++c) {
        check(x[c] == static_cast<float>((rec.porosity[c] - b.stats.porosity.mean) / b.stats.porosity.std),
              "porosity channel");
        check(x[n + c] ==
                  static_cast<float>((rec.permeability[c] - b.stats.permeability.mean) / b.stats.permeability.std),
              "permeability channel");
        check(x[3 * n + c] == static_cast<float>(pattern[(k - 1) % 6]), "cycle indicator pattern");
        check(x[4 * n + c] == static_cast<float>(static_cast<double>(k) / m.n_steps), "time channel step/18");
      }
      check(x[2 * n + well] == 1.0f && x[2 * n] == 0.0f, "distance endpoints 1.0 at the well, 0.0 at the corner");
    }
  }
  const auto paper = run_config_from_json(paper_preset());
  const auto divisor = static_cast<int>(std::llround(paper.schedule.total_duration() / paper.sim.output_interval));
  check(divisor == 60 && time_channel(1, divisor) == 1.0 / 60.0 && time_channel(42, divisor) == 42.0 / 60.0 &&
            time_channel(60, divisor) == 1.0,
        "paper time channel step/60");

  std::set<std::string> unique(bad.begin(), bad.end());
  std::string detail = "splits 14/3/3, T_train 12 of 18, views val1-val3, channels recomputed";
  for (const auto& u : unique) detail += "; failed: " + u;
  return {bad.empty(), detail};
}

Outcome directional() {
  const auto& d = desk_data();
  const auto stat = train_model(d.cfg, d.bundle, SampleMode::static_time, Target::saturation);
  const auto autor = train_model(d.cfg, d.bundle, SampleMode::autoregressive, Target::saturation);
  EvalRequest req;
  req.targets = {Target::saturation};
  req.first_step = 1;
  req.last_step = d.bundle.n_steps();
  const auto e = cmd_eval(d.cfg, req);

  const auto n_val = d.bundle.manifest.val_geo.size();
  const auto steps = static_cast<std::size_t>(d.bundle.n_steps());
  bool finite = true;
  std::size_t n_static = 0;
  std::size_t n_auto = 0;
  std::size_t n_extrap = 0;
  for (const auto& r : e.rows) {
    finite = finite && std::isfinite(r.mae_norm) && std::isfinite(r.mae_physical);
    n_static += r.model == "static";
    n_auto += r.model == "auto";
    n_extrap += r.model == "auto" && r.extrap;
  }
  for (const auto& r : e.diffs) finite = finite && std::isfinite(r.diff_norm);
  const bool complete = e.divergences.empty() && e.diffs.size() == n_val * steps && n_static == n_val * steps &&
                        n_auto == n_val * steps && n_extrap == n_val * (steps - 12);
  const bool files = std::filesystem::exists(d.cfg.eval_dir() / "mae_curve.csv") &&
                     std::filesystem::exists(d.cfg.eval_dir() / "diff_curve.csv");
  const double a = autor.result.best_val;
  const double s = stat.result.best_val;
  return {a < s && complete && finite && files,
          "val MAE auto one-step " + fmt("%.6f", a) + " < static " + fmt("%.6f", s) + "; " +
              std::to_string(e.diffs.size()) + " diff points and extrapolation through step " +
              std::to_string(steps) + (finite ? ", all finite" : ", non-finite values")};
}

Outcome dataset_format() {
  const auto& d = desk_data();
  const auto bytes = io::read_file(d.cfg.dataset_path());
  const auto back = decode_dataset(bytes);
  const bool round_trip = encode_dataset(back) == bytes && back.sims == d.bundle.sims;

  // Fixed little-endian layout, decoded by hand.
  const auto u32 = [&](std::size_t at) {
    return static_cast<std::uint32_t>(bytes[at]) | static_cast<std::uint32_t>(bytes[at + 1]) << 8 |
           static_cast<std::uint32_t>(bytes[at + 2]) << 16 | static_cast<std::uint32_t>(bytes[at + 3]) << 24;
  };
  const std::size_t first = 10 + u32(6);
  const std::uint32_t raw = u32(first);
  float phi0 = 0.0f;
  std::memcpy(&phi0, &raw, 4);
  const std::size_t chunk = 4 * detail::chunk_floats(back);
  const auto crc = static_cast<std::uint32_t>(::crc32(0L, bytes.data() + first, static_cast<uInt>(chunk)));
  const bool layout = std::string(bytes.begin(), bytes.begin() + 4) == "UHSD" && bytes[4] == 1 && bytes[5] == 0 &&
                      bytes[first - 1] == '}' && phi0 == back.sims[0].porosity[0] && crc == u32(first + chunk);

  auto corrupt = bytes;
  corrupt[first + chunk / 2] ^= 0x10;
  bool detected = false;
  try {
    decode_dataset(corrupt);
  } catch (const FormatError& e) {
    detected = e.kind() == FormatError::Kind::checksum;
  }
  return {round_trip && layout && detected, std::string("round trip ") + (round_trip ? "bit-exact" : "differs") +
                                                ", little-endian layout " + (layout ? "verified" : "wrong") +
                                                ", flipped chunk byte " + (detected ? "caught by CRC" : "missed")};
}

// ---------------------------------------------------------------------------
// 10. Metrics oracle

Outcome metrics_oracle() {
  MetricsInput in;
  in.schedule.cycle.push_back({StageKind::inject_h2, 6 * units::month, {ControlKind::mass_rate, 1.0, 150.0}, 1.0});
  in.schedule.cycle.push_back({StageKind::withdraw, 6 * units::month, {ControlKind::fixed_bhp, 0.0, 60.0}, 1.0});
  in.schedule.cycles = 1;
  in.times = {0.0, 6 * units::month, 12 * units::month};
  in.mean_pressure_bar = {80.0, 100.0, 70.0};
  WellRecord injected;
  injected.injected[kH2] = 1000.0;
  WellRecord produced = injected;
  produced.produced[kH2] = 400.0;
  produced.produced[kCushion] = 100.0;
  in.wells = {WellRecord{}, injected, produced};
  const auto m = compute_uhs_metrics(in);
  const double rec = m.at(0).recovery.value_or(NAN);
  const double pur = m.at(0).purity.value_or(NAN);
  return {std::abs(rec - 0.4) <= 1e-12 && std::abs(pur - 0.8) <= 1e-12,
          "recovery " + fmt("%.15f", rec) + ", purity " + fmt("%.15f", pur) + " (+/- 1e-12)"};
}

}  // namespace
}  // namespace uhs

int main() {
  using namespace uhs;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"conservation", conservation},     {"pressure solver", pressure_oracle}, {"symmetry", symmetry},
      {"self-convergence", self_convergence}, {"gradient check", gradients},   {"overfit", overfit},
      {"protocol", protocol},             {"directional", directional},         {"dataset format", dataset_format},
      {"metrics oracle", metrics_oracle}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
