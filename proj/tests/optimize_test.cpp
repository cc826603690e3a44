#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "enerlyze/optimize.hpp"
#include "enerlyze/lang/parser.hpp"
#include "enerlyze/random.hpp"

using namespace enerlyze;

namespace {

lang::CheckedProgram checked(const std::string& src) { return lang::check(lang::parse_source(src)); }

std::string read_benchmark(const std::string& name) {
  std::ifstream in(std::string(ENERLYZE_BENCHMARK_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const lang::MethodDecl& method(const lang::Program& p, const std::string& name) {
  const auto* m = p.find_method(name);
  if (!m) throw std::runtime_error("no method " + name);
  return *m;
}

std::int64_t dict_count(const lang::CheckedProgram& cp, const std::string& block, const std::string& op) {
  const auto d = build_dictionary(cp, divide_blocks(cp));
  const auto row = d.find(block);
  if (!row) return -1;
  return d.counts[static_cast<std::size_t>(*row)][static_cast<std::size_t>(op_id(op))];
}

ExecutionLog run_once(const lang::CheckedProgram& cp, std::int64_t frames = 1) {
  ExecutionCase c;
  c.case_id = "case_0000";
  c.frame_budget = frames;
  c.inputs = {{0, {100, 300, 1}}};
  return run(cp, divide_blocks(cp), c);
}

constexpr const char* kProgram1 = R"(
record Node {
  Object children;
  float angle;
  int tag;
  bool visible;
}

void draw(Node n) {
  if (n.visible) {
    emit(n.tag);
  }
}

void visit(Node n) {
  if (n.children != null) {
    n.angle = n.angle + 0.01;
  }
  draw(n);
  if (n.children != null) {
    emit(list_size(n.children));
  }
}

void frame(int a, int b, bool t) {
  Node n = new Node();
  n.tag = a;
  n.visible = t;
  if (b > 200) {
    n.children = list_new();
    list_add(n.children, n);
  }
  visit(n);
  emit(n.angle);
}
)";

constexpr const char* kProgram2Visit = R"(
record Node {
  Object children;
  float angle;
  int tag;
  bool visible;
}

void draw(Node n) {
}

void visit(Node n) {
  if (n.children != null) {
    n.angle = n.angle + 0.01;
    draw(n);
    emit(list_size(n.children));
  } else {
    draw(n);
  }
}
)";

constexpr const char* kProgram7 = R"(
global Object vertices;
global Object vertexBuffer;

void init() {
  vertices = buffer_new(2112);
  vertexBuffer = buffer_new(2112);
  for (int v = 0; v < 2112; v++) {
    buffer_put(vertices, (float) v * 0.5);
  }
}

void blit() {
  buffer_clear(vertexBuffer);
  for (int i = 0; i < buffer_limit(vertices); i = i + 3) {
    buffer_put(vertexBuffer, buffer_get(vertices, i));
    buffer_put(vertexBuffer, buffer_get(vertices, i + 1));
    buffer_put(vertexBuffer, buffer_get(vertices, i + 2));
  }
}

void frame(int a, int b, bool t) {
  if (t) {
    buffer_set(vertices, a, (float) b);
  }
  blit();
  emit(buffer_get(vertexBuffer, a + b));
}
)";

struct Bench {
  lang::CheckedProgram cp;
  std::vector<ExecutionCase> cases;
  EnergyModel model;
  CostBasis basis;
  EnergyProfile profile;
};

Bench bench(const std::string& src, int n_cases = 4, std::int64_t frames = 3) {
  Bench b{checked(src), {}, oracle_model(CostTable::defaults()), {}, {}};
  b.cases = equivalence_corpus(b.cp, n_cases, 7, frames);
  b.basis = cost_basis(b.model, CostTable::defaults());
  b.profile = modeled_run(b.cp, b.cases, b.basis).profile;
  return b;
}

EnergyProfile synthetic(const std::vector<std::pair<std::string, double>>& rows) {
  EnergyProfile p;
  p.case_id = "seeded";
  for (const auto& [id, j] : rows) {
    p.blocks.push_back({id, 1, j, {}});
    p.total_J += j;
  }
  return p;
}

std::vector<std::string> ids(const std::vector<HotBlock>& v) {
  std::vector<std::string> out;
  for (const auto& h : v) out.push_back(h.id);
  return out;
}

}  // namespace

// Hot-spot identification.

TEST(FindCostlyBlocks, TableThreeTopThree) {
  const auto p = synthetic({{"CCNode.transform()", 1648.4},
                            {"CCTextureAtlas.putVertex()", 1494.4},
                            {"CCNode.visit().if_4.for_1", 1426.8},
                            {"CCNode.visit()", 2128.6},
                            {"CCNode.transform().if_1", 1426.3},
                            {"CCTextureAtlas.putTexCoords()", 1107.8},
                            {"CCAtlas.updateValues().for_1", 1018.7},
                            {"CCNode.visit().if_3.for_1", 915.7},
                            {"CCSprite.draw()", 766.9},
                            {"CCTexture2D.name()", 537.5}});
  EXPECT_EQ(ids(find_costly_blocks(p, HotBlockPolicy::top_k(3))),
            (std::vector<std::string>{"CCNode.visit()", "CCNode.transform()", "CCTextureAtlas.putVertex()"}));
}

TEST(FindCostlyBlocks, OrbitShareThreshold) {
  std::vector<std::pair<std::string, double>> rows = {{"blit().for_1", 80.9}, {"draw()", 1.3}};
  for (int k = 0; k < 17; ++k) rows.push_back({"rest_" + std::to_string(k), (100.0 - 80.9 - 1.3) / 17});
  const auto hot = find_costly_blocks(synthetic(rows), HotBlockPolicy::share_threshold(0.10));
  EXPECT_EQ(ids(hot), std::vector<std::string>{"blit().for_1"});
  EXPECT_NEAR(hot[0].share, 0.809, 1e-12);
}

TEST(FindCostlyBlocks, UniformProfileHasNoHotSpot) {
  std::vector<std::pair<std::string, double>> rows;
  for (int k = 0; k < 20; ++k) rows.push_back({"b" + std::to_string(k), 1.0});
  EXPECT_TRUE(find_costly_blocks(synthetic(rows), HotBlockPolicy::share_threshold(0.10)).empty());
}

TEST(FindCostlyBlocks, ShareThresholdIsExactSet) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<std::string, double>> rows;
    const int n = static_cast<int>(rng.uniform_int(1, 30));
    for (int k = 0; k < n; ++k) rows.push_back({"b" + std::to_string(k), rng.uniform(0.0, 1.0)});
    const auto p = synthetic(rows);
    const double theta = rng.uniform(0.01, 0.5);
    std::set<std::string> expected;
    for (const auto& b : p.blocks)
      if (b.cost_J / p.total_J > theta) expected.insert(b.id);
    const auto hot = find_costly_blocks(p, HotBlockPolicy::share_threshold(theta));
    const auto hot_ids = ids(hot);
    EXPECT_EQ(std::set<std::string>(hot_ids.begin(), hot_ids.end()), expected);
    for (std::size_t i = 1; i < hot.size(); ++i) EXPECT_GE(hot[i - 1].cost_J, hot[i].cost_J);
  }
}

TEST(FindCostlyBlocks, FoldsLoopHeaders) {
  const auto p = synthetic({{"f()", 1.0}, {"f().for_1.init", 0.5}, {"f().for_1.bool", 2.0},
                            {"f().for_1.update", 1.5}, {"f().for_1", 3.0}, {"f().for_1.if_1", 0.25}});
  const auto folded = fold_loop_headers(p);
  ASSERT_NE(folded.find("f().for_1"), nullptr);
  EXPECT_DOUBLE_EQ(folded.find("f().for_1")->cost_J, 7.0);
  EXPECT_EQ(folded.find("f().for_1.bool"), nullptr);
  EXPECT_NE(folded.find("f().for_1.if_1"), nullptr);
  EXPECT_DOUBLE_EQ(folded.total_J, p.total_J);
}

TEST(HotBlockPolicy, ParseAndValidate) {
  EXPECT_EQ(HotBlockPolicy::parse("top:10").k, 10);
  EXPECT_EQ(HotBlockPolicy::parse("top:10").kind, HotBlockPolicy::Kind::TopK);
  EXPECT_DOUBLE_EQ(HotBlockPolicy::parse("share:0.10").fraction, 0.10);
  EXPECT_THROW(HotBlockPolicy::parse("top:0"), Error);
  EXPECT_THROW(HotBlockPolicy::parse("share:1.5"), Error);
  EXPECT_THROW(HotBlockPolicy::parse("median"), Error);
}

TEST(StrategySpec, RoundTrip) {
  for (const char* s : {"LoopUnroll:blit().for_1:8", "MethodInline:transform:visit", "MethodInline:name",
                        "IfCombination:visit", "LibraryReplacement:blit().for_1", "LoopInvariantMotion:blit().for_1"}) {
    EXPECT_EQ(Strategy::parse(s).spec(), s);
  }
  EXPECT_EQ(Strategy::parse("LoopUnroll:blit().for_1:8").label(), "LoopUnroll(8)");
  EXPECT_THROW(Strategy::parse("Teleport:x"), Error);
}

// If combination.

TEST(IfCombination, ProgramOneBecomesProgramTwo) {
  const auto r = apply_if_combination(checked(kProgram1), "visit");
  ASSERT_TRUE(r.applied) << r.reason;
  const auto expected = lang::parse_source(kProgram2Visit);
  EXPECT_TRUE(lang::structurally_equal(method(r.program, "visit").body, method(expected, "visit").body))
      << lang::pretty_print(r.program);
}

TEST(IfCombination, OneComparisonFewerPerEntry) {
  const auto before = checked(kProgram1);
  const auto after = recheck(apply_if_combination(before, "visit").program);
  EXPECT_EQ(dict_count(before, "visit()", "Equal_Object_null"), 2);
  EXPECT_EQ(dict_count(after, "visit()", "Equal_Object_null"), 1);
}

TEST(IfCombination, RefusesMutatedPredicate) {
  std::string src = kProgram1;
  src.replace(src.find("n.angle = n.angle + 0.01;"), 25, "n.children = null;");
  EXPECT_FALSE(apply_if_combination(checked(src), "visit").applied);
  // The intervening call writes the field the predicate reads.
  std::string src2 = kProgram1;
  src2.replace(src2.find("emit(n.tag);"), 12, "n.children = null;");
  EXPECT_FALSE(apply_if_combination(checked(src2), "visit").applied);
}

TEST(IfCombination, EquivalentOnHundredCases) {
  const auto before = checked(kProgram1);
  const auto after = recheck(apply_if_combination(before, "visit").program);
  const auto v = check_equivalence(before, after, equivalence_corpus(before, 100, 11, 4));
  EXPECT_TRUE(v.pass) << v.detail;
  EXPECT_EQ(v.cases, 100);
}

// Method inlining.

TEST(MethodInline, VoidCalleeAtStatementSite) {
  const auto cp = checked(read_benchmark("clickmove.esrc"));
  const auto r = apply_method_inline(cp, "transform", "visit");
  ASSERT_TRUE(r.applied) << r.reason;
  ASSERT_NE(r.program.find_method("transform"), nullptr);  // declaration retained
  const auto after = recheck(r.program);
  bool calls_transform = false;
  for (const auto& s : method(after.program(), "visit").body)
    if (s.kind == lang::StmtKind::Call && s.exprs[0].name == "transform") calls_transform = true;
  EXPECT_FALSE(calls_transform);
  // One invocation per visit() execution disappears.
  const auto b = run_once(cp, 2);
  const auto a = run_once(after, 2);
  const auto nb = total_op_counts(b.block_ids, b.block_counts, build_dictionary(cp, divide_blocks(cp)));
  const auto na = total_op_counts(a.block_ids, a.block_counts, build_dictionary(after, divide_blocks(after)));
  const auto mi = static_cast<std::size_t>(op_id("MethodInvocation"));
  EXPECT_EQ(nb[mi] - na[mi], b.count("transform()"));
  EXPECT_EQ(a.count("transform()"), 0);
  EXPECT_EQ(a.output_digest, b.output_digest);
  EXPECT_EQ(a.state_digest, b.state_digest);
}

TEST(MethodInline, AccessorAtBothCallSites) {
  const auto cp = checked(read_benchmark("clickmove.esrc"));
  const auto r = apply_method_inline(cp, "name", "");
  ASSERT_TRUE(r.applied) << r.reason;
  const std::string text = lang::pretty_print(r.program);
  EXPECT_NE(text.find("emit(n.tag);"), std::string::npos) << text;
  EXPECT_NE(text.find("emit(root.tag + moves);"), std::string::npos) << text;
  EXPECT_NE(text.find("int name(Node n)"), std::string::npos);
  const auto after = recheck(r.program);
  EXPECT_EQ(run_once(after, 3).count("name()"), 0);
}

TEST(MethodInline, RefusesRecursionAndSize) {
  const auto cp = checked(read_benchmark("clickmove.esrc"));
  EXPECT_FALSE(apply_method_inline(cp, "visit", "frame").applied);
  EXPECT_FALSE(apply_method_inline(cp, "steer", "frame", 5).applied);
}

TEST(MethodInline, RenamesCalleeLocals) {
  const auto cp = checked(R"(
global int g;
void bump(int x) {
  int t = x * 2;
  g = g + t;
}
void frame(int a, int b, bool c) {
  int t = a;
  bump(t);
  bump(b + 1);
  emit(g + t);
}
)");
  const auto r = apply_method_inline(cp, "bump", "frame");
  ASSERT_TRUE(r.applied) << r.reason;
  const auto after = recheck(r.program);
  const auto v = check_equivalence(cp, after, equivalence_corpus(cp, 30, 5, 3));
  EXPECT_TRUE(v.pass) << v.detail;
}

// Loop-invariant code motion.

TEST(LoopInvariantMotion, HoistsLimit) {
  const auto cp = checked(kProgram7);
  const auto r = apply_loop_invariant_motion(cp, "blit().for_1");
  ASSERT_TRUE(r.applied) << r.reason;
  const std::string text = lang::pretty_print(r.program);
  EXPECT_NE(text.find("int limit = buffer_limit(vertices);"), std::string::npos) << text;
  EXPECT_NE(text.find("i < limit;"), std::string::npos) << text;
  const auto after = recheck(r.program);
  EXPECT_EQ(dict_count(cp, "blit().for_1.bool", "Library_buffer_limit"), 1);
  EXPECT_EQ(dict_count(after, "blit().for_1.bool", "Library_buffer_limit"), 0);
  const auto a = run_once(after);
  const auto b = run_once(cp);
  // 704 iterations plus the exit test each lose one library call.
  EXPECT_EQ(a.count("blit().for_1.bool"), 705);
  EXPECT_EQ(b.output_digest, a.output_digest);
}

TEST(LoopInvariantMotion, RefusesMutatedReceiver) {
  const auto cp = checked(R"(
global Object items;
void init() {
  items = list_new();
}
void frame(int a, int b, bool c) {
  for (int i = 0; i < list_size(items); i++) {
    if (i < 3) {
      list_add(items, items);
    }
  }
  list_add(items, items);
  emit(list_size(items));
}
)");
  EXPECT_FALSE(apply_loop_invariant_motion(cp, "frame().for_1").applied);
}

TEST(LoopInvariantMotion, HoistsBodyDeclarations) {
  const auto cp = checked(R"(
record P {
  int v;
}
global Object items;
void init() {
  items = list_new();
  for (int k = 0; k < 5; k++) {
    P p = new P();
    p.v = k;
    list_add(items, p);
  }
}
void frame(int a, int b, bool c) {
  int s = 0;
  for (int i = 0; i < list_size(items); i++) {
    P q = list_get(items, i);
    s = s + q.v * a;
  }
  emit(s);
}
)");
  const auto r = apply_loop_invariant_motion(cp, "frame().for_1");
  ASSERT_TRUE(r.applied) << r.reason;
  const auto after = recheck(r.program);
  EXPECT_EQ(dict_count(after, "frame().for_1", "Declaration_Object"), 0);
  EXPECT_TRUE(check_equivalence(cp, after, equivalence_corpus(cp, 30, 9, 2)).pass);
}

// Loop unrolling.

TEST(LoopUnroll, ProgramSevenByEight) {
  const auto cp = checked(kProgram7);
  const auto r = apply_loop_unroll(cp, "blit().for_1", 8);
  ASSERT_TRUE(r.applied) << r.reason;
  const std::string text = lang::pretty_print(r.program);
  EXPECT_NE(text.find("i = i + 24"), std::string::npos) << text;
  EXPECT_NE(text.find("buffer_get(vertices, i + 23)"), std::string::npos) << text;
  const auto after = recheck(r.program);
  const auto a = run_once(after);
  const auto b = run_once(cp);
  EXPECT_EQ(b.count("blit().for_1"), 704);
  EXPECT_EQ(a.count("blit().for_1"), 88);
  EXPECT_EQ(a.count("blit().for_1.update"), 88);
  EXPECT_EQ(a.count("blit().for_1.bool"), 89);
  EXPECT_EQ(a.output_digest, b.output_digest);
  EXPECT_EQ(a.state_digest, b.state_digest);
}

TEST(LoopUnroll, OverheadFallsBySevenEighths) {
  const auto cp = checked(kProgram7);
  const auto after = recheck(apply_loop_unroll(cp, "blit().for_1", 8).program);
  const auto a = run_once(after, 3);
  const auto b = run_once(cp, 3);
  // Per-iteration overhead: the BlockGoto_for of each body entry, the update
  // and every header test that starts an iteration.
  auto overhead = [](const lang::CheckedProgram& p, const ExecutionLog& log) {
    const auto d = build_dictionary(p, divide_blocks(p));
    const auto row = [&](const char* id) { return d.counts[static_cast<std::size_t>(*d.find(id))]; };
    const auto body = log.count("blit().for_1");
    double e = 0.0;
    const auto t = CostTable::defaults();
    for (std::size_t j = 0; j < t.cost_uJ.size(); ++j) {
      e += static_cast<double>(body) * static_cast<double>(row("blit().for_1.update")[j]) * t.cost_uJ[j];
      e += static_cast<double>(body) * static_cast<double>(row("blit().for_1.bool")[j]) * t.cost_uJ[j];
    }
    e += static_cast<double>(body * row("blit().for_1")[static_cast<std::size_t>(op_id("BlockGoto_for"))]) *
         t.cost("BlockGoto_for");
    return e;
  };
  EXPECT_NEAR(overhead(after, a), overhead(cp, b) / 8.0, 1e-9 * overhead(cp, b));
}

TEST(LoopUnroll, FactorChoiceAndDivisibility) {
  const auto cp = checked(kProgram7);
  EXPECT_FALSE(apply_loop_unroll(cp, "blit().for_1", 5, {2, 4, 5, 8}).applied);
  const auto r = apply_loop_unroll(cp, "blit().for_1", 0);
  ASSERT_TRUE(r.applied);
  EXPECT_NE(lang::pretty_print(r.program).find("i = i + 24"), std::string::npos);
  // An unknown bound is refused.
  const auto unknown = checked(R"(
void frame(int a, int b, bool c) {
  for (int i = 0; i < a; i++) {
    emit(i);
  }
}
)");
  EXPECT_FALSE(apply_loop_unroll(unknown, "frame().for_1", 2).applied);
}

TEST(Equivalence, DetectsWrongStride) {
  const auto cp = checked(kProgram7);
  std::string text = lang::pretty_print(apply_loop_unroll(cp, "blit().for_1", 8).program);
  text.replace(text.find("i = i + 24"), 10, "i = i + 21");
  const auto v = check_equivalence(cp, checked(text), equivalence_corpus(cp, 10, 1, 2));
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.diverging_case, "case_0000");
}

TEST(Equivalence, IdenticalProgramsPass) {
  const auto cp = checked(kProgram7);
  const auto v = check_equivalence(cp, cp, equivalence_corpus(cp, 20, 1, 2));
  EXPECT_TRUE(v.pass);
  EXPECT_EQ(v.cases, 20);
}

// Library replacement.

TEST(LibraryReplacement, CopyLoopBecomesBulkPut) {
  const auto cp = checked(kProgram7);
  const auto r = apply_library_replacement(cp, "blit().for_1");
  ASSERT_TRUE(r.applied) << r.reason;
  const auto& body = method(r.program, "blit").body;
  ASSERT_EQ(body.size(), 2u);
  EXPECT_EQ(lang::pretty_print(std::vector<lang::Stmt>{body[1]}), "buffer_bulk_put(vertexBuffer, vertices);\n");
  const auto after = recheck(r.program);
  const auto v = check_equivalence(cp, after, equivalence_corpus(cp, 20, 2, 3));
  EXPECT_TRUE(v.pass) << v.detail;
}

TEST(LibraryReplacement, RefusesTransformedElements) {
  std::string src = kProgram7;
  src.replace(src.find("buffer_get(vertices, i + 1)"), 27, "buffer_get(vertices, i + 1) * 2.0");
  EXPECT_FALSE(apply_library_replacement(checked(src), "blit().for_1").applied);
  std::string partial = kProgram7;
  partial.replace(partial.find("int i = 0;"), 10, "int i = 3;");
  EXPECT_FALSE(apply_library_replacement(checked(partial), "blit().for_1").applied);
}

// Folding and CSE.

TEST(ConstantFold, FoldsLiterals) {
  const auto cp = checked(R"(
void frame(int y, int b, bool c) {
  int x = 2 * 3 + y;
  emit(x);
}
)");
  const auto r = apply_constant_fold_propagate(cp, "frame");
  ASSERT_TRUE(r.applied);
  EXPECT_NE(lang::pretty_print(r.program).find("int x = 6 + y;"), std::string::npos) << lang::pretty_print(r.program);
}

TEST(ConstantFold, PropagatesFinalLocals) {
  const auto cp = checked(R"(
void frame(int y, int b, bool c) {
  int k = 4;
  int x = k * 2 + y;
  emit(x);
}
)");
  const auto r = apply_constant_fold_propagate(cp, "frame");
  ASSERT_TRUE(r.applied);
  EXPECT_NE(lang::pretty_print(r.program).find("int x = 8 + y;"), std::string::npos) << lang::pretty_print(r.program);
  EXPECT_TRUE(check_equivalence(cp, recheck(r.program), equivalence_corpus(cp, 20, 1, 2)).pass);
}

TEST(CommonSubexpr, ProfitabilityGate) {
  const auto cp = checked(R"(
void frame(int a, int b, bool f) {
  int c = a - b;
  int x = a * b + c;
  int y = a * b + c;
  emit(x + y);
}
)");
  auto cheap = CostTable::defaults().cost_uJ;
  cheap[static_cast<std::size_t>(op_id("Declaration_int"))] = 0.01;
  cheap[static_cast<std::size_t>(op_id("Assign_int_int"))] = 0.01;
  const auto r = apply_cse(cp, "frame", cheap);
  ASSERT_TRUE(r.applied) << r.reason;
  const auto after = recheck(r.program);
  EXPECT_EQ(dict_count(after, "frame()", "Multi_int_int"), 1);
  EXPECT_TRUE(check_equivalence(cp, after, equivalence_corpus(cp, 20, 1, 2)).pass);

  auto dear = CostTable::defaults().cost_uJ;
  dear[static_cast<std::size_t>(op_id("Declaration_int"))] = 50.0;
  EXPECT_FALSE(apply_cse(cp, "frame", dear).applied);
}

// Strategy selection and evaluation.

TEST(SelectStrategies, CopyLoop) {
  auto b = bench(kProgram7);
  const auto folded = fold_loop_headers(b.profile);
  const auto hot = find_costly_blocks(folded, HotBlockPolicy::top_k(1));
  ASSERT_EQ(hot[0].id, "blit().for_1");
  const auto c = select_strategies(b.cp, hot[0], folded, b.basis, b.cases, OptimizeConfig{});
  std::vector<std::string> labels;
  for (const auto& x : c) labels.push_back(x.strategy.label());
  EXPECT_EQ(labels, (std::vector<std::string>{"LibraryReplacement", "LoopUnroll(8)", "LoopInvariantMotion"}));
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GT(c[i - 1].saving_J, c[i].saving_J);
}

TEST(SelectStrategies, DoubleIf) {
  auto b = bench(kProgram1);
  const auto folded = fold_loop_headers(b.profile);
  HotBlock visit{"visit()", folded.find("visit()")->cost_J, 0.0};
  // draw() stands in for a large rendering method, too big to inline.
  OptimizeConfig cfg;
  cfg.inline_max_statements = 1;
  const auto c = select_strategies(b.cp, visit, folded, b.basis, b.cases, cfg);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].strategy.spec(), "IfCombination:visit");
}

TEST(SelectStrategies, StraightLineBlockHasNone) {
  auto b = bench(R"(
void frame(int a, int b, bool c) {
  emit(a);
  emit(b);
}
)");
  HotBlock f{"frame()", b.profile.total_J, 1.0};
  EXPECT_TRUE(select_strategies(b.cp, f, b.profile, b.basis, b.cases, OptimizeConfig{}).empty());
}

TEST(Evaluate, EmptyPlanSavesNothing) {
  auto b = bench(kProgram7);
  OptimizeConfig cfg;
  cfg.equivalence_cases = 5;
  cfg.equivalence_frames = 2;
  const auto r = evaluate(b.cp, {}, b.model, b.cases, cfg);
  EXPECT_EQ(r.original_J, r.final_J);
  EXPECT_EQ(r.total_saving_pct, 0.0);
}

TEST(Evaluate, SavingsIdentity) {
  auto b = bench(kProgram7);
  OptimizeConfig cfg;
  cfg.equivalence_cases = 5;
  cfg.equivalence_frames = 2;
  const auto r = evaluate(b.cp, {Strategy::parse("LoopUnroll:blit().for_1:8")}, b.model, b.cases, cfg);
  ASSERT_EQ(r.steps.size(), 1u);
  const auto& s = r.steps[0];
  ASSERT_TRUE(s.applied) << s.reason;
  EXPECT_TRUE(s.verdict.pass);
  double delta = 0.0;
  for (const auto& [op, n] : s.op_deltas) delta += static_cast<double>(n) * b.basis.cost_uJ[static_cast<std::size_t>(op_id(op))] * 1e-6;
  EXPECT_NEAR(s.energy_after_J - s.energy_before_J, delta, 1e-9 * s.energy_before_J);
  EXPECT_GT(s.saving_pct, 0.0);
}

TEST(Evaluate, OrbitSavingsOrdering) {
  auto b = bench(read_benchmark("orbit.esrc"), 3, 2);
  OptimizeConfig cfg;
  cfg.equivalence_cases = 5;
  cfg.equivalence_frames = 2;
  double saving[3];
  const char* plans[3] = {"LibraryReplacement:blit().for_1", "LoopUnroll:blit().for_1:8",
                          "LoopInvariantMotion:blit().for_1"};
  for (int k = 0; k < 3; ++k) {
    const auto r = evaluate(b.cp, {Strategy::parse(plans[k])}, b.model, b.cases, cfg);
    ASSERT_TRUE(r.steps[0].applied) << plans[k] << ": " << r.steps[0].reason;
    ASSERT_TRUE(r.steps[0].verdict.pass) << r.steps[0].verdict.detail;
    saving[k] = r.total_saving_pct;
  }
  EXPECT_GT(saving[0], saving[1]);
  EXPECT_GT(saving[1], saving[2]);
  EXPECT_GT(saving[2], 0.0);
}

TEST(Evaluate, ClickMoveFourChanges) {
  auto b = bench(read_benchmark("clickmove.esrc"), 3, 3);
  OptimizeConfig cfg;
  cfg.equivalence_cases = 10;
  cfg.equivalence_frames = 3;
  const std::vector<Strategy> plan = {Strategy::parse("IfCombination:visit"),
                                      Strategy::parse("MethodInline:transform:visit"),
                                      Strategy::parse("LoopInvariantMotion:visit().if_1.for_1"),
                                      Strategy::parse("MethodInline:name")};
  const auto r = evaluate(b.cp, plan, b.model, b.cases, cfg);
  ASSERT_EQ(r.steps.size(), 4u);
  double prev = r.original_J;
  for (const auto& s : r.steps) {
    ASSERT_TRUE(s.applied) << s.strategy.spec() << ": " << s.reason;
    EXPECT_TRUE(s.verdict.pass) << s.verdict.detail;
    EXPECT_LT(s.energy_after_J, prev) << s.strategy.spec();
    prev = s.energy_after_J;
  }
  EXPECT_GT(r.total_saving_pct, 0.0);
}

TEST(Optimize, OrbitPicksLibraryReplacement) {
  // A full frame budget, so the one-off init() loop does not dominate.
  auto b = bench(read_benchmark("orbit.esrc"), 3, 60);
  OptimizeConfig cfg;
  cfg.equivalence_cases = 5;
  cfg.equivalence_frames = 2;
  const auto r = optimize(b.cp, b.model, b.cases, HotBlockPolicy::share_threshold(0.10), cfg);
  ASSERT_EQ(ids(r.hot_blocks), std::vector<std::string>{"blit().for_1"});
  ASSERT_FALSE(r.steps.empty());
  EXPECT_EQ(r.steps[0].strategy.kind, StrategyKind::LibraryReplacement);
  EXPECT_TRUE(r.steps[0].applied);
  for (const auto& s : r.steps)
    if (s.applied) EXPECT_TRUE(s.verdict.pass);
  EXPECT_GT(r.total_saving_pct, 0.0);
  const auto j = nlohmann::json::parse(report_to_json(r).dump());
  EXPECT_EQ(j.at("hot_blocks").size(), 1u);
  EXPECT_NE(report_markdown(r).find("LibraryReplacement"), std::string::npos);
}
