#include <cmath>

#include "helpers.hpp"
#include "toy_dataset.hpp"
#include "uhs/evaluator.hpp"

namespace uhs {
namespace {

TEST(MaeCurve, Oracles) {
  const std::vector<std::vector<double>> truth{{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}};
  auto shifted = truth;
  for (auto& f : shifted) for (auto& v : f) v += 0.1;
  for (double m : mae_curve(truth, truth)) EXPECT_EQ(m, 0.0);
  for (double m : mae_curve(shifted, truth)) EXPECT_NEAR(m, 0.1, 1e-15);
  EXPECT_THROW(mae_curve({{0.1}}, truth), InvalidArgument);
}

CurveRow row(std::uint32_t id, int step, const std::string& model, double mae) {
  return {id, step, model, Target::saturation, mae, mae, false};
}

TEST(DiffCurve, Oracles) {
  const std::vector<CurveRow> a{row(1, 1, "auto", 0.2), row(1, 2, "auto", 0.4)};
  const std::vector<CurveRow> s{row(1, 1, "static", 0.5), row(1, 2, "static", 0.4)};
  const auto d = diff_curve(a, s);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d[0].diff_norm, -0.3, 1e-15);
  EXPECT_EQ(d[1].diff_norm, 0.0);
  for (const auto& r : diff_curve(a, a)) EXPECT_EQ(r.diff_norm, 0.0);
  const auto back = diff_curve(s, a);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(back[i].diff_norm, -d[i].diff_norm);
  EXPECT_THROW(diff_curve(a, {row(2, 1, "static", 0.5), row(1, 2, "static", 0.4)}), InvalidArgument);
  EXPECT_THROW(diff_curve(a, {s[0]}), InvalidArgument);
}

TEST(MeanCurves, AveragePerModelAndStep) {
  const auto m = mean_curves({row(1, 1, "auto", 0.2), row(2, 1, "auto", 0.4), row(1, 1, "static", 0.5)});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_NEAR(m[0].mae_norm, 0.3, 1e-15);
  EXPECT_EQ(m[1].mae_norm, 0.5);
}

TEST(Predictions, ConstantStaticModel) {
  const auto b = test::toy_bundle();
  const Predictor constant = [&](std::span<const float>) { return std::vector<float>(b.cells(), 0.5f); };
  const std::vector<int> steps{1, 2, 3, 4, 5, 6};
  const auto series = static_series(b, 1, constant, steps);
  for (const auto& f : series) EXPECT_EQ(f, series.front());
  const auto rows = score_series(b, 1, Target::saturation, "static", steps, series);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& truth = b.sims[1].saturation[static_cast<std::size_t>(steps[k])];
    double sum = 0.0;
    for (float v : truth) sum += std::abs(0.5 - static_cast<double>(v));
    EXPECT_NEAR(rows[k].mae_norm, sum / static_cast<double>(truth.size()), 1e-12);
    EXPECT_EQ(rows[k].mae_physical, rows[k].mae_norm);
    EXPECT_EQ(rows[k].extrap, steps[k] > b.manifest.t_train);
    EXPECT_EQ(rows[k].sim_id, 101u);
  }
}

TEST(Predictions, PressureMaeInBar) {
  const auto b = test::toy_bundle();
  const std::vector<int> steps{2};
  const std::vector<std::vector<float>> zero{std::vector<float>(b.cells(), 0.0f)};
  const auto rows = score_series(b, 0, Target::pressure, "static", steps, zero);
  double sum = 0.0;
  for (float v : b.sims[0].pressure[2]) sum += std::abs(static_cast<double>(v) - b.stats.pressure.mean);
  EXPECT_NEAR(rows[0].mae_physical, sum / static_cast<double>(b.cells()), 1e-4);
  EXPECT_NEAR(rows[0].mae_physical, rows[0].mae_norm * b.stats.pressure.std, 1e-4);
}

/// The previous-saturation channel back in saturation units.
std::vector<float> previous_channel(const DatasetBundle& b, std::span<const float> x) {
  std::vector<float> p(x.begin() + static_cast<std::ptrdiff_t>(4 * b.cells()), x.end());
  for (auto& v : p) v = static_cast<float>(b.stats.saturation.denormalize(v));
  return p;
}

TEST(Rollout, IdentityModelIsAFixedPoint) {
  const auto b = test::toy_bundle();
  const Predictor echo = [&](std::span<const float> x) { return previous_channel(b, x); };
  const auto init = target_field(b, 0, 0, Target::saturation);
  const auto out = autoregressive_rollout(b, 0, Target::saturation, echo, init, 6);
  ASSERT_EQ(out.size(), 6u);
  for (const auto& f : out) {
    for (std::size_t c = 0; c < init.size(); ++c) EXPECT_NEAR(f[c], init[c], 1e-6);
  }
}

TEST(Rollout, FeedsItsOwnOutputBack) {
  const auto b = test::toy_bundle();
  const Predictor step = [&](std::span<const float> x) {
    auto p = previous_channel(b, x);
    for (auto& v : p) v += 0.125f;
    return p;
  };
  const auto init = target_field(b, 0, 0, Target::saturation);
  const auto out = autoregressive_rollout(b, 0, Target::saturation, step, init, 4);
  for (std::size_t c = 0; c < init.size(); ++c) {
    EXPECT_NEAR(out[1][c], init[c] + 0.25f, 1e-6);
    EXPECT_NEAR(out[3][c], init[c] + 0.5f, 1e-6);
  }
  // Step 1 of the rollout is the teacher-forced prediction.
  const auto one = step(assemble_sample(b, 0, 1, SampleMode::autoregressive, Target::saturation).input);
  EXPECT_EQ(out[0], one);
}

TEST(Rollout, DivergenceReportsTheStep) {
  const auto b = test::toy_bundle();
  int calls = 0;
  const Predictor bad = [&](std::span<const float> x) {
    auto p = previous_channel(b, x);
    if (++calls == 3) p[5] = NAN;
    return p;
  };
  try {
    autoregressive_rollout(b, 0, Target::saturation, bad, target_field(b, 0, 0, Target::saturation), 6);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step 3"), std::string::npos);
  }
}

TEST(Rollout, ExtendsPastTheTimeChannelRange) {
  // Autoregressive inputs carry no time channel, so any horizon works.
  const auto b = test::toy_bundle(6, 8, 2);
  auto trimmed = b;
  trimmed.time_divisor = 6;
  const Predictor echo = [&](std::span<const float> x) { return previous_channel(b, x); };
  EXPECT_NO_THROW(autoregressive_rollout(trimmed, 0, Target::saturation, echo, target_field(b, 0, 0, Target::saturation), 12));
  EXPECT_THROW(static_series(trimmed, 0, echo, {7}), InvalidArgument);
}

Schedule one_cycle() {
  Schedule s;
  s.cycle.push_back({StageKind::inject_h2, 6 * units::month, {ControlKind::mass_rate, 1.0, 150.0}, 1.0});
  s.cycle.push_back({StageKind::withdraw, 6 * units::month, {ControlKind::fixed_bhp, 0.0, 60.0}, 1.0});
  s.cycles = 1;
  return s;
}

MetricsInput scripted() {
  MetricsInput in;
  in.schedule = one_cycle();
  in.times = {0.0, 6 * units::month, 12 * units::month};
  in.mean_pressure_bar = {80.0, 100.0, 70.0};
  WellRecord w0;
  WellRecord w1;
  w1.injected[kH2] = 1000.0;
  WellRecord w2 = w1;
  w2.produced[kH2] = 400.0;
  w2.produced[kCushion] = 100.0;
  w2.produced[kWater] = 50.0;
  in.wells = {w0, w1, w2};
  return in;
}

TEST(Metrics, RecoveryAndPurity) {
  const auto m = compute_uhs_metrics(scripted());
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].cycle, 1);
  EXPECT_NEAR(*m[0].recovery, 0.4, 1e-12);
  EXPECT_NEAR(*m[0].purity, 0.8, 1e-12);
  EXPECT_NEAR(*m[0].gwr, 10.0, 1e-12);
  EXPECT_NEAR(*m[0].injectivity, (1000.0 / (6 * units::month)) / (150.0 - 100.0), 1e-15);
  EXPECT_EQ(m[1].cycle, 0);
  EXPECT_NEAR(*m[1].recovery, 0.4, 1e-12);
}

TEST(Metrics, NoWithdrawalMeansNoRecovery) {
  auto in = scripted();
  in.schedule.cycle[1] = {StageKind::shut_in, 6 * units::month, {}, 1.0};
  in.wells[2] = in.wells[1];
  const auto m = compute_uhs_metrics(in);
  EXPECT_EQ(*m[0].recovery, 0.0);
  EXPECT_FALSE(m[0].purity.has_value());
  EXPECT_FALSE(m[0].gwr.has_value());
}

TEST(Metrics, PureHydrogenStream) {
  auto in = scripted();
  in.wells[2].produced[kCushion] = 0.0;
  in.wells[2].produced[kWater] = 0.0;
  const auto m = compute_uhs_metrics(in);
  EXPECT_EQ(*m[0].purity, 1.0);
  EXPECT_TRUE(std::isinf(*m[0].gwr));
}

TEST(Metrics, NothingInjectedLeavesRecoveryAbsent) {
  auto in = scripted();
  for (auto& w : in.wells) w.injected[kH2] = 0.0;
  EXPECT_FALSE(compute_uhs_metrics(in)[0].recovery.has_value());
}

TEST(Metrics, BoundariesMustBeSnapshots) {
  auto in = scripted();
  in.times[0] = 1 * units::month;
  EXPECT_THROW(compute_uhs_metrics(in), InvalidArgument);
}

TEST(Metrics, CsvUsesAllForTheCumulativeRow) {
  const auto text = metrics_csv({{7, compute_uhs_metrics(scripted())}});
  EXPECT_EQ(text.substr(0, text.find('\n')), "sim_id,cycle,recovery,purity,gwr,injectivity");
  EXPECT_NE(text.find("\n7,1,0.4,0.8,10,"), std::string::npos);
  EXPECT_NE(text.find("\n7,all,0.4,"), std::string::npos);
}

TEST(PredictionFile, RoundTripAndScore) {
  const auto b = test::toy_bundle();
  const std::vector<int> steps{2, 3};
  for (auto target : {Target::saturation, Target::pressure}) {
    std::vector<std::vector<float>> pred;
    for (int k : steps) pred.push_back(target_field(b, 2, k, target));
    const auto file = decode_sim(encode_sim(make_prediction_file(b, 2, target, SampleMode::autoregressive, steps, pred)));
    EXPECT_EQ(file.header.at("kind"), "prediction");
    EXPECT_EQ(file.channels.size(), 1u);
    const auto parsed = parse_prediction(file, b);
    EXPECT_EQ(parsed.sim, 2);
    EXPECT_EQ(parsed.steps, steps);
    EXPECT_EQ(parsed.mode, "auto");
    const auto rows = score_series(b, parsed.sim, parsed.target, "ext_auto", parsed.steps, parsed.fields);
    for (const auto& r : rows) {
      EXPECT_LE(r.mae_norm, 1e-5);
      EXPECT_LE(r.mae_physical, 1e-4);
    }
  }
}

TEST(PredictionFile, LayoutErrors) {
  const auto b = test::toy_bundle();
  const std::vector<int> steps{1};
  const std::vector<std::vector<float>> pred{target_field(b, 0, 1, Target::saturation)};
  auto f = make_prediction_file(b, 0, Target::saturation, SampleMode::static_time, steps, pred);
  auto wrong_id = f;
  wrong_id.header["sim_id"] = 9999;
  EXPECT_THROW(parse_prediction(wrong_id, b), FormatError);
  auto wrong_step = f;
  wrong_step.header["steps"] = std::vector<int>{99};
  EXPECT_THROW(parse_prediction(wrong_step, b), FormatError);
  auto wrong_channel = f;
  wrong_channel.channels = {"P_bar"};
  EXPECT_THROW(parse_prediction(wrong_channel, b), FormatError);
}

TEST(Csv, CurveHeaders) {
  const auto mae = mae_curve_csv({row(3, 1, "auto", 0.25)}, {row(0, 1, "auto", 0.25)});
  EXPECT_EQ(mae, "sim_id,step,model,target,mae_norm,mae_physical,extrap\n3,1,auto,saturation,0.25,0.25,false\n"
                 "mean,1,auto,saturation,0.25,0.25,false\n");
  const auto diff = diff_curve_csv({{3, 2, Target::pressure, -0.5, -2.0, true}});
  EXPECT_EQ(diff, "sim_id,step,target,diff_norm,diff_physical,extrap\n3,2,pressure,-0.5,-2,true\n");
}

TEST(Svg, PlotIsWellFormed) {
  const auto svg = svg_line_plot("t", {{"a", {1, 2, 3}, {0.1, 0.3, 0.2}}}, 2.0);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
}

}  // namespace
}  // namespace uhs
