#include <gtest/gtest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "enerlyze/energy.hpp"
#include "enerlyze/lang/parser.hpp"

using namespace enerlyze;

namespace {

PowerTrace uniform_trace(double t0, double t1, int n, double (*p)(double)) {
  PowerTrace tr;
  for (int i = 0; i <= n; ++i) {
    const double t = t0 + (t1 - t0) * i / n;
    tr.samples.push_back({t, p(t)});
  }
  return tr;
}

OpCountVector counts(std::initializer_list<std::pair<const char*, std::int64_t>> items) {
  OpCountVector v(op_universe().size(), 0);
  for (const auto& [name, n] : items) v[static_cast<std::size_t>(op_id(name))] = n;
  return v;
}

SimConfig noisy(double sigma) {
  SimConfig cfg;
  cfg.noise = NoiseModel::MultiplicativeGaussian;
  cfg.sigma_rel = sigma;
  return cfg;
}

// Closed-form C_v of the right-Riemann sum of a constant trace whose samples
// are scaled by independent N(1, sigma) factors.
double predicted_cv(const PowerTrace& tr, double sigma) {
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t i = 1; i < tr.samples.size(); ++i) {
    const double w = tr.samples[i].t_s - tr.samples[i - 1].t_s;
    sum += w;
    sq += w * w;
  }
  return sigma * std::sqrt(sq) / sum;
}

}  // namespace

TEST(Integrate, ConstantPower) {
  EXPECT_NEAR(integrate(uniform_trace(0, 10, 10, [](double) { return 2.0; })), 20.0, 20.0 * 1e-9);
}

TEST(Integrate, RightRiemannByHand) {
  PowerTrace tr{{{0, 0}, {1, 1}, {2, 2}}};
  EXPECT_DOUBLE_EQ(integrate(tr), 3.0);
}

TEST(Integrate, LinearRampAtOneKilohertz) {
  EXPECT_NEAR(integrate(uniform_trace(0, 1, 1000, [](double t) { return t; })), 0.5, 1e-3);
}

TEST(Integrate, Errors) {
  EXPECT_THROW(integrate(PowerTrace{{{0, 1}}}), Error);
  EXPECT_THROW(integrate(PowerTrace{}), Error);
  EXPECT_THROW(integrate(PowerTrace{{{0, 1}, {1, 1}, {1, 2}}}), Error);
  EXPECT_THROW(integrate(PowerTrace{{{0, 1}, {2, 1}, {1, 2}}}), Error);
}

TEST(Integrate, Linearity) {
  auto tr = uniform_trace(0, 3, 7, [](double t) { return 1.0 + t * t; });
  const double e = integrate(tr);
  for (auto& s : tr.samples) s.power_W *= 2.5;
  EXPECT_NEAR(integrate(tr), 2.5 * e, 1e-12 * e);
}

TEST(Integrate, RefinementOfAlignedPiecewiseConstant) {
  // Power 3 W on (0,1], 1 W on (1,2].
  PowerTrace coarse{{{0, 0}, {1, 3}, {2, 1}}};
  PowerTrace fine;
  fine.samples.push_back({0, 0});
  for (int i = 1; i <= 8; ++i) fine.samples.push_back({i * 0.25, i <= 4 ? 3.0 : 1.0});
  EXPECT_NEAR(integrate(fine), integrate(coarse), 1e-12);
}

TEST(ReplicateStats, ConstantListHasZeroCv) {
  const auto st = replicate_stats({5, 5, 5});
  EXPECT_EQ(st.cv, 0.0);
  EXPECT_EQ(st.n, 3);
  EXPECT_DOUBLE_EQ(st.mean_J, 5.0);
}

TEST(ReplicateStats, TwoValuesByHand) {
  const auto st = replicate_stats({9, 11});
  EXPECT_DOUBLE_EQ(st.mean_J, 10.0);
  EXPECT_NEAR(st.std_J, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(st.cv, 0.1414, 1e-4);
}

TEST(ReplicateStats, ScaleInvariantCv) {
  const std::vector<double> xs = {1.3, 0.9, 1.1, 1.25, 0.7};
  const auto a = replicate_stats(xs);
  for (double k : {0.001, 3.0, 1e6}) {
    std::vector<double> ys;
    for (double x : xs) ys.push_back(k * x);
    EXPECT_NEAR(replicate_stats(ys).cv, a.cv, 1e-12 * a.cv);
  }
}

TEST(ReplicateStats, Errors) {
  EXPECT_THROW(replicate_stats({}), Error);
  EXPECT_THROW(replicate_stats({0.0, 0.0}), Error);
  EXPECT_THROW(replicate_stats({-1.0, -2.0}), Error);
}

TEST(NetEnergy, ByHand) {
  PowerTrace gross{{{0, 0}, {1, 1.0}}};
  PowerTrace idle{{{0, 0}, {1, 0.5}}};
  const auto e = net_energy("c", {gross}, {idle});
  EXPECT_DOUBLE_EQ(e.gross_J, 1.0);
  EXPECT_DOUBLE_EQ(e.idle_J, 0.5);
  EXPECT_DOUBLE_EQ(e.net_J, 0.5);
  EXPECT_EQ(net_energy("c", {idle}, {idle}).net_J, 0.0);
}

TEST(NetEnergy, ScalesIdleOrRejectsMismatch) {
  PowerTrace gross{{{0, 0}, {2, 1.0}}};
  PowerTrace idle{{{0, 0}, {10, 0.5}}};
  EXPECT_DOUBLE_EQ(net_energy("c", {gross}, {idle}, true).net_J, 1.0);
  EXPECT_THROW(net_energy("c", {gross}, {idle}, false), Error);
  PowerTrace close{{{0, 0}, {2.01, 0.5}}};
  EXPECT_NO_THROW(net_energy("c", {gross}, {close}, false));
}

TEST(NetEnergy, JsonRoundTrip) {
  PowerTrace gross{{{0, 0}, {1, 1.0}}};
  PowerTrace gross2{{{0, 0}, {1, 1.2}}};
  PowerTrace idle{{{0, 0}, {1, 0.5}}};
  const auto e = net_energy("case_0007", {gross, gross2}, {idle});
  const auto back = case_energy_from_json(case_energy_to_json(e));
  EXPECT_EQ(back.case_id, "case_0007");
  EXPECT_EQ(back.net_J, e.net_J);
  EXPECT_EQ(back.stats.cv, e.stats.cv);
  EXPECT_EQ(back.stats.n, 2);
}

TEST(CostTable, SeededValues) {
  const auto t = CostTable::defaults();
  EXPECT_EQ(t.cost("BlockGoto_if"), 6.7);
  EXPECT_EQ(t.cost("BlockGoto_for"), 4.1);
  EXPECT_EQ(t.cost("BlockGoto_while"), 1.1);
  EXPECT_EQ(t.cost("Declaration_Object"), 2.97);
  EXPECT_EQ(t.idle_power_W, 0.5);
  EXPECT_NO_THROW(t.validate());
  const double mi = t.cost("MethodInvocation");
  for (std::size_t j = 0; j < t.cost_uJ.size(); ++j)
    if (static_cast<int>(j) != ops::method_invocation()) EXPECT_LT(t.cost_uJ[j], mi) << op_universe()[j].name;
}

TEST(CostTable, JsonRoundTripIsBitIdentical) {
  auto t = CostTable::defaults();
  t.set("Addition_int_int", 0.1 + 0.2);
  const auto back = cost_table_from_json(nlohmann::json::parse(cost_table_to_json(t).dump()));
  EXPECT_EQ(back.cost_uJ, t.cost_uJ);
  EXPECT_EQ(back.idle_power_W, t.idle_power_W);
}

TEST(CostTable, JsonRejectsBadTables) {
  EXPECT_THROW(cost_table_from_json({{"cost_uJ", {{"NoSuchOp", 1.0}}}}), Error);
  EXPECT_THROW(cost_table_from_json({{"cost_uJ", {{"Increment", -1.0}}}}), Error);
  EXPECT_THROW(cost_table_from_json({{"cost_uJ", {{"Library_buffer_bulk_put", 99.0}}}}), Error);
  EXPECT_THROW(cost_table_from_json({{"idle_power_W", 0.0}}), Error);
  const auto partial = cost_table_from_json({{"cost_uJ", {{"Increment", 0.25}}}});
  EXPECT_EQ(partial.cost("Increment"), 0.25);
  EXPECT_EQ(partial.cost("BlockGoto_if"), 6.7);
}

TEST(Simulate, BlockGotoForThousandTimes) {
  const auto t = CostTable::defaults();
  const auto tr = simulate_counts(counts({{"BlockGoto_for", 1000}}), 1.0, "c", t, SimConfig{});
  EXPECT_NEAR(integrate(tr), 0.5 + 1000 * 4.1e-6, 1e-9);
  for (const auto& s : tr.samples) EXPECT_GE(s.power_W, 0.0);
}

TEST(Simulate, IdleOnly) {
  const auto t = CostTable::defaults();
  EXPECT_NEAR(integrate(simulate_counts(counts({}), 2.0, "c", t, SimConfig{})), 1.0, 1e-12);
  EXPECT_NEAR(integrate(simulate_idle(10.0, t, SimConfig{})), 5.0, 5e-12);
  EXPECT_THROW(simulate_idle(0.0, t, SimConfig{}), Error);
  EXPECT_THROW(simulate_counts(counts({}), 0.0, "c", t, SimConfig{}), Error);
}

TEST(Simulate, TraceShape) {
  const auto tr = simulate_idle(1.05, CostTable::defaults(), SimConfig{});
  ASSERT_EQ(tr.samples.size(), 33u);  // 0, 1/30, ..., 31/30, 1.05
  EXPECT_EQ(tr.samples.front().t_s, 0.0);
  EXPECT_EQ(tr.samples.back().t_s, 1.05);
}

TEST(Simulate, RoundTripIsExactOnRunLog) {
  const auto cp = lang::check(lang::parse_source(R"(
global Object out;
void init() { out = buffer_new(300); }
void frame(int x) {
  buffer_clear(out);
  for (int i = 0; i < 300; i = i + 1) {
    if (i < x) { buffer_put(out, (float) i); }
  }
})"));
  const auto bm = divide_blocks(cp);
  const auto dict = build_dictionary(cp, bm);
  ExecutionCase c;
  c.case_id = "c";
  c.frame_budget = 20;
  c.inputs = {{0, {150}}};
  const auto log = run(cp, bm, c);
  ASSERT_FALSE(log.failed) << log.error;
  const auto t = CostTable::defaults();
  const auto n_e = total_op_counts(log.block_ids, log.block_counts, dict);
  const auto e = net_energy("c", {simulate_power(log, dict, t, SimConfig{})}, {simulate_idle(3.0, t, SimConfig{})});
  const double modeled = modeled_energy_J(n_e, t);
  EXPECT_NEAR(e.net_J, modeled, 1e-9 * modeled);
  EXPECT_EQ(e.stats.cv, 0.0);
  ExecutionLog failed = log;
  failed.failed = true;
  EXPECT_THROW(simulate_power(failed, dict, t, SimConfig{}), Error);
}

TEST(Simulate, NoiseIsSeededAndMatchesPrediction) {
  const auto t = CostTable::defaults();
  const auto cfg = noisy(0.02);
  const auto n_e = counts({{"MethodInvocation", 20000}});
  EXPECT_EQ(trace_to_csv(simulate_counts(n_e, 1.0, "a", t, cfg, 3)),
            trace_to_csv(simulate_counts(n_e, 1.0, "a", t, cfg, 3)));
  EXPECT_NE(trace_to_csv(simulate_counts(n_e, 1.0, "a", t, cfg, 3)),
            trace_to_csv(simulate_counts(n_e, 1.0, "a", t, cfg, 4)));
  // Mean C_v over many 10-replicate cases tracks the closed form.
  double sum_cv = 0.0;
  const int cases = 200;
  for (int c = 0; c < cases; ++c) {
    std::vector<double> es;
    for (int r = 0; r < 10; ++r) es.push_back(integrate(simulate_counts(n_e, 1.0, "case" + std::to_string(c), t, cfg, r)));
    sum_cv += replicate_stats(es).cv;
  }
  const double prediction = predicted_cv(simulate_counts(n_e, 1.0, "x", t, SimConfig{}), 0.02);
  const double mean_cv = sum_cv / cases;
  EXPECT_GT(mean_cv, prediction / 2);
  EXPECT_LT(mean_cv, prediction * 2);
}

TEST(Simulate, NoisyIdleMeanPower) {
  const auto tr = simulate_idle(40.0, CostTable::defaults(), noisy(0.02));
  ASSERT_GE(tr.samples.size(), 1000u);
  double sum = 0.0;
  for (std::size_t i = 1; i < tr.samples.size(); ++i) sum += tr.samples[i].power_W;
  EXPECT_NEAR(sum / static_cast<double>(tr.samples.size() - 1), 0.5, 0.005);
}

TEST(Simulate, CsvRoundTrip) {
  const auto tr = simulate_idle(0.5, CostTable::defaults(), noisy(0.05));
  const auto back = trace_from_csv(trace_to_csv(tr));
  ASSERT_EQ(back.samples.size(), tr.samples.size());
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].t_s, tr.samples[i].t_s);
    EXPECT_EQ(back.samples[i].power_W, tr.samples[i].power_W);
  }
  EXPECT_THROW(trace_from_csv("time,power\n0,1\n"), Error);
  EXPECT_THROW(trace_from_csv("t_s,power_w\n0,abc\n"), Error);
}

TEST(SimConfig, Validation) {
  SimConfig cfg;
  cfg.sample_rate_Hz = 0;
  EXPECT_THROW(simulate_idle(1.0, CostTable::defaults(), cfg), Error);
  cfg = noisy(-0.1);
  EXPECT_THROW(simulate_idle(1.0, CostTable::defaults(), cfg), Error);
}
