#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "enerlyze/calibration.hpp"
#include "enerlyze/lang/parser.hpp"
#include "enerlyze/model.hpp"
#include "enerlyze/random.hpp"

using namespace enerlyze;

namespace {

DesignMatrix matrix(std::vector<std::vector<double>> rows, std::vector<double> e) {
  DesignMatrix d;
  d.m = static_cast<int>(rows.size());
  d.l = static_cast<int>(rows.front().size());
  for (const auto& r : rows) d.n.insert(d.n.end(), r.begin(), r.end());
  d.e_uJ = std::move(e);
  return d;
}

double objective(const DesignMatrix& d, const std::vector<double>& c) {
  double s = 0.0;
  for (int i = 0; i < d.m; ++i) {
    double p = 0.0;
    for (int j = 0; j < d.l; ++j) p += d.at(i, j) * c[static_cast<std::size_t>(j)];
    s += (p - d.e_uJ[static_cast<std::size_t>(i)]) * (p - d.e_uJ[static_cast<std::size_t>(i)]);
  }
  return s;
}

// Exact NNLS for tiny systems: the optimum is the unconstrained least-squares
// solution on some support, so try every support.
std::vector<double> brute_force_nnls(const DesignMatrix& d) {
  std::vector<double> best(static_cast<std::size_t>(d.l), 0.0);
  double best_obj = objective(d, best);
  for (int mask = 1; mask < (1 << d.l); ++mask) {
    std::vector<int> cols;
    for (int j = 0; j < d.l; ++j)
      if (mask & (1 << j)) cols.push_back(j);
    Eigen::MatrixXd a(d.m, static_cast<int>(cols.size()));
    Eigen::VectorXd e(d.m);
    for (int i = 0; i < d.m; ++i) {
      e(i) = d.e_uJ[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < cols.size(); ++k) a(i, static_cast<int>(k)) = d.at(i, cols[k]);
    }
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(e);
    if ((x.array() < 0).any()) continue;
    std::vector<double> c(static_cast<std::size_t>(d.l), 0.0);
    for (std::size_t k = 0; k < cols.size(); ++k) c[static_cast<std::size_t>(cols[k])] = x(static_cast<int>(k));
    const double obj = objective(d, c);
    if (obj < best_obj) {
      best_obj = obj;
      best = c;
    }
  }
  return best;
}

Dataset linear_dataset(int m, const std::vector<std::pair<const char*, double>>& truth, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  for (int i = 0; i < m; ++i) {
    DatasetRow r;
    r.case_id = "case_" + std::to_string(i);
    r.op_counts.assign(op_universe().size(), 0);
    double uJ = 0.0;
    for (const auto& [name, c] : truth) {
      const auto n = rng.uniform_int(0, 1000);
      r.op_counts[static_cast<std::size_t>(op_id(name))] = n;
      uJ += static_cast<double>(n) * c;
    }
    r.net_J = uJ * 1e-6;
    d.rows.push_back(std::move(r));
  }
  return d;
}

FoldResult fold(int i, double nmae_train, double nmae_valid) {
  FoldResult f;
  f.metrics = {i, 0.9, 0.9, nmae_train, nmae_valid};
  f.fit.cost_uJ.assign(op_universe().size(), static_cast<double>(i + 1));
  return f;
}

}  // namespace

TEST(Assemble, TwoByTwo) {
  Dataset d;
  OpCountVector a(op_universe().size(), 0), b(op_universe().size(), 0);
  a[0] = 1;
  b[1] = 2;
  d.rows = {{"x", a, 1e-6}, {"y", b, 2e-6}};
  const auto n = assemble(d);
  EXPECT_EQ(n.m, 2);
  EXPECT_EQ(n.l, static_cast<int>(op_universe().size()));
  EXPECT_EQ(n.at(0, 0), 1);
  EXPECT_EQ(n.at(0, 1), 0);
  EXPECT_EQ(n.at(1, 0), 0);
  EXPECT_EQ(n.at(1, 1), 2);
  EXPECT_NEAR(n.e_uJ[1], 2.0, 1e-12);
  d.rows[1].op_counts.pop_back();
  EXPECT_THROW(assemble(d), Error);
  EXPECT_THROW(assemble(Dataset{}), Error);
}

TEST(Assemble, ZeroColumnRetainedButUnidentifiable) {
  const auto d = assemble(linear_dataset(20, {{"Increment", 0.5}, {"Addition_int_int", 0.5}}, 1));
  const auto cols = analyze_columns(d);
  const int inc = op_id("Increment");
  const int dec = op_id("Decrement");
  EXPECT_TRUE(cols.observed[static_cast<std::size_t>(inc)]);
  EXPECT_TRUE(cols.identifiable[static_cast<std::size_t>(inc)]);
  EXPECT_FALSE(cols.observed[static_cast<std::size_t>(dec)]);
  EXPECT_FALSE(cols.identifiable[static_cast<std::size_t>(dec)]);
}

TEST(Fit, DiagonalSystem) {
  const auto r = fit(matrix({{2, 0}, {0, 4}}, {10, 8}));
  ASSERT_EQ(r.cost_uJ.size(), 2u);
  EXPECT_NEAR(r.cost_uJ[0], 5.0, 1e-9);
  EXPECT_NEAR(r.cost_uJ[1], 2.0, 1e-9);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.residual, 0.0, 1e-9);
}

TEST(Fit, NegativeTargetsKeepCostsNonNegative) {
  const auto r = fit(matrix({{1, 0}, {0, 1}, {1, 1}}, {-3, 2, -0.5}));
  for (double c : r.cost_uJ) EXPECT_GE(c, 0.0);
  EXPECT_EQ(r.cost_uJ[0], 0.0);
}

TEST(Fit, MatchesBruteForceOnTinySystems) {
  Rng rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const int l = 1 + trial % 3;
    const int m = l + static_cast<int>(rng.uniform_int(0, 4));
    std::vector<std::vector<double>> rows;
    std::vector<double> e;
    for (int i = 0; i < m; ++i) {
      std::vector<double> r;
      for (int j = 0; j < l; ++j) r.push_back(static_cast<double>(rng.uniform_int(0, 9)));
      rows.push_back(r);
      e.push_back(rng.uniform(-5, 20));
    }
    const auto d = matrix(rows, e);
    const auto got = fit(d);
    const auto want = brute_force_nnls(d);
    const double o_got = objective(d, got.cost_uJ);
    const double o_want = objective(d, want);
    EXPECT_LE(o_got, o_want * (1 + 1e-6) + 1e-9) << "trial " << trial;
    for (double c : got.cost_uJ) EXPECT_GE(c, 0.0);
  }
}

TEST(Fit, ScaleEquivariance) {
  const auto base = assemble(linear_dataset(40, {{"Increment", 0.5}, {"Less_int_int", 0.9}, {"And", 0.3}}, 3));
  auto scaled = base;
  for (auto& e : scaled.e_uJ) e *= 7.5;
  const auto a = fit(base);
  const auto b = fit(scaled);
  for (std::size_t j = 0; j < a.cost_uJ.size(); ++j) EXPECT_NEAR(b.cost_uJ[j], 7.5 * a.cost_uJ[j], 1e-6 * (1 + b.cost_uJ[j]));
}

TEST(Fit, RecoversNoiseFreeCosts) {
  const std::vector<std::pair<const char*, double>> truth = {
      {"Increment", 0.48},        {"Less_int_int", 0.9},     {"BlockGoto_for", 4.1}, {"BlockGoto_if", 6.7},
      {"MethodInvocation", 14.2}, {"Declaration_Object", 2.97}, {"Library_list_get", 2.4}, {"FieldReference", 1.25}};
  const auto d = assemble(linear_dataset(200, truth, 11));
  const auto r = fit(d);
  for (const auto& [name, c] : truth) EXPECT_NEAR(r.cost_uJ[static_cast<std::size_t>(op_id(name))], c, 0.01 * c) << name;
}

TEST(Fit, DeterministicGivenSeed) {
  const auto d = assemble(linear_dataset(30, {{"Increment", 0.5}, {"Less_int_int", 0.9}}, 5));
  EXPECT_EQ(fit(d).cost_uJ, fit(d).cost_uJ);
}

TEST(Nmae, Examples) {
  EXPECT_EQ(nmae({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_NEAR(nmae({1.1, 2.2, 3.3}, {1, 2, 3}), 0.1, 1e-12);
  EXPECT_NEAR(nmae({8, 12}, {10, 10}), 0.2, 1e-12);
  EXPECT_THROW(nmae({1, 2}, {1, 0}), Error);
  EXPECT_THROW(nmae({1}, {1, 2}), Error);
}

TEST(Pearson, Examples) {
  EXPECT_NEAR(pearson_r({2, 4, 6}, {1, 2, 3}), 1.0, 1e-12);
  EXPECT_NEAR(pearson_r({9, 8, 7, 6}, {1, 2, 3, 4}), -1.0, 1e-12);
  EXPECT_THROW(pearson_r({1, 1, 1}, {1, 2, 3}), Error);
  EXPECT_THROW(pearson_r({1}, {1}), Error);
}

TEST(CrossValidate, PartitionsEvenly) {
  const auto d = linear_dataset(8, {{"Increment", 0.5}, {"Less_int_int", 0.9}}, 2);
  const auto folds = cross_validate(d, 4);
  ASSERT_EQ(folds.size(), 4u);
  std::multiset<int> seen;
  for (const auto& f : folds) {
    EXPECT_EQ(f.valid_rows.size(), 2u);
    seen.insert(f.valid_rows.begin(), f.valid_rows.end());
  }
  EXPECT_EQ(seen, (std::multiset<int>{0, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_THROW(cross_validate(d, 9), Error);
}

TEST(CrossValidate, PerfectLinearData) {
  const auto d = linear_dataset(40, {{"Increment", 0.5}, {"Less_int_int", 0.9}, {"Library_emit", 2.0}}, 4);
  for (const auto& f : cross_validate(d, 4)) {
    EXPECT_NEAR(f.metrics.nmae_valid, 0.0, 1e-9);
    EXPECT_NEAR(f.metrics.nmae_train, 0.0, 1e-9);
    EXPECT_NEAR(f.metrics.r_valid, 1.0, 1e-9);
    EXPECT_NEAR(f.metrics.r_train, 1.0, 1e-9);
  }
}

TEST(SelectModel, Thresholds) {
  EXPECT_TRUE(select_model({fold(0, 0.1, 0.1), fold(1, 0.1, 0.1)}).accepted);
  EXPECT_FALSE(select_model({fold(0, 0.1, 0.1), fold(1, 0.1, 0.2)}).accepted);
  // Worst training NMAE 16.3% with validation up to 15.7%.
  const std::vector<FoldResult> reported = {fold(0, 0.141, 0.093), fold(1, 0.163, 0.157), fold(2, 0.15, 0.12),
                                         fold(3, 0.145, 0.11)};
  EXPECT_FALSE(select_model(reported, 0.85).accepted);
  const auto m = select_model(reported, 0.83);
  EXPECT_TRUE(m.accepted);
  EXPECT_EQ(m.best_fold, 0);
  EXPECT_EQ(m.cost_uJ[0], 1.0);
  EXPECT_EQ(m.folds.size(), 4u);
}

TEST(Columns, DuplicateAndProportionalColumnsFormGroups) {
  Rng rng(9);
  Dataset d;
  for (int i = 0; i < 30; ++i) {
    DatasetRow r;
    r.case_id = std::to_string(i);
    r.op_counts.assign(op_universe().size(), 0);
    const auto a = rng.uniform_int(1, 100);
    r.op_counts[static_cast<std::size_t>(op_id("Library_math_sin"))] = a;
    r.op_counts[static_cast<std::size_t>(op_id("Library_math_cos"))] = a;
    r.op_counts[static_cast<std::size_t>(op_id("Increment"))] = 2 * a;
    r.op_counts[static_cast<std::size_t>(op_id("Less_int_int"))] = rng.uniform_int(1, 100);
    r.net_J = 1e-6 * static_cast<double>(a) * (4.4 + 4.4 + 2 * 0.48) +
              1e-6 * 0.9 * static_cast<double>(r.op_counts[static_cast<std::size_t>(op_id("Less_int_int"))]);
    d.rows.push_back(r);
  }
  const auto n = assemble(d);
  const auto cols = analyze_columns(n);
  ASSERT_EQ(cols.groups.size(), 1u);
  const auto& g = cols.groups[0];
  EXPECT_EQ(g.ops.size(), 3u);
  EXPECT_FALSE(g.split_identifiable);
  EXPECT_TRUE(g.sum_identifiable);
  EXPECT_TRUE(cols.identifiable[static_cast<std::size_t>(op_id("Less_int_int"))]);
  EXPECT_FALSE(cols.identifiable[static_cast<std::size_t>(op_id("Library_math_sin"))]);
  const auto r = fit(n);
  std::vector<double> truth(op_universe().size(), 0.0);
  truth[static_cast<std::size_t>(op_id("Library_math_sin"))] = 4.4;
  truth[static_cast<std::size_t>(op_id("Library_math_cos"))] = 4.4;
  truth[static_cast<std::size_t>(op_id("Increment"))] = 0.48;
  EXPECT_NEAR(group_sum(g, r.cost_uJ), group_sum(g, truth), 1e-6 * group_sum(g, truth));
  EXPECT_NEAR(r.cost_uJ[static_cast<std::size_t>(op_id("Less_int_int"))], 0.9, 1e-6);
}

TEST(Model, BuildAndJsonRoundTrip) {
  const auto d = linear_dataset(40, {{"Increment", 0.5}, {"Less_int_int", 0.9}, {"Library_emit", 2.0}}, 8);
  auto m = build_model(d, 4, 0.85);
  m.idle_power_W = 0.5;
  EXPECT_TRUE(m.accepted);
  EXPECT_NEAR(m.cost("Less_int_int"), 0.9, 1e-6);
  EXPECT_TRUE(m.observed(op_id("Increment")));
  EXPECT_FALSE(m.observed(op_id("Decrement")));
  const auto back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
  EXPECT_EQ(back.cost_uJ, m.cost_uJ);
  EXPECT_EQ(back.accepted, m.accepted);
  EXPECT_EQ(back.idle_power_W, 0.5);
  EXPECT_EQ(back.folds.size(), 4u);
  EXPECT_EQ(back.columns.identifiable, m.columns.identifiable);
  EXPECT_EQ(model_to_json(back).dump(), model_to_json(m).dump());
}

TEST(Calibration, HasOneKernelPerOperation) {
  const auto kernels = calibration_kernels();
  std::set<std::string> names(kernels.begin(), kernels.end());
  EXPECT_EQ(names.size(), kernels.size());
  EXPECT_EQ(kernels.size(), op_universe().size());
  for (const auto& op : op_universe()) EXPECT_TRUE(names.count(op.name)) << op.name;
  const auto cp = lang::check(lang::parse_source(calibration_source()));
  const auto dict = build_dictionary(cp, divide_blocks(cp));
  OpCountVector seen(op_universe().size(), 0);
  for (const auto& row : dict.counts)
    for (std::size_t j = 0; j < row.size(); ++j) seen[j] += row[j];
  for (std::size_t j = 0; j < seen.size(); ++j) EXPECT_GT(seen[j], 0) << op_universe()[j].name;
}

TEST(Calibration, NoiseFreeDatasetIsFullRankAndRecoversCosts) {
  const auto table = CostTable::defaults();
  const auto ds = calibration_dataset(table, SimConfig{}, calibration_design(42), 1, 4);
  ASSERT_EQ(ds.rows.size(), 200u);
  const auto n = assemble(ds);
  const auto cols = analyze_columns(n);
  const auto r = fit(n);
  for (std::size_t j = 0; j < op_universe().size(); ++j) {
    EXPECT_TRUE(cols.identifiable[j]) << op_universe()[j].name;
    EXPECT_NEAR(r.cost_uJ[j], table.cost_uJ[j], 0.01 * table.cost_uJ[j]) << op_universe()[j].name;
  }
}
