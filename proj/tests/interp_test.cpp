#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "enerlyze/interp.hpp"
#include "enerlyze/lang/parser.hpp"
#include "support/random_program.hpp"

using namespace enerlyze;

namespace {

lang::CheckedProgram compile(const std::string& src) { return lang::check(lang::parse_source(src)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig entry(const std::string& name) {
  RunConfig cfg;
  cfg.entry_method = name;
  return cfg;
}

ExecutionCase one_frame(std::vector<std::string> ablated = {}) {
  ExecutionCase c;
  c.case_id = "t";
  c.ablated_blocks = std::move(ablated);
  return c;
}

constexpr const char* kCounted = "void f(){ for (int i = 0; i < 10; i++) { emit(i); } }";

constexpr const char* kCopyLoop = R"(
global Object vertices;
global Object out;

void init() {
  vertices = buffer_new(2112);
  out = buffer_new(2112);
  for (int k = 0; k < 2112; k++) {
    buffer_put(vertices, (float) k);
  }
}

void blit() {
  buffer_clear(out);
  for (int i = 0; i < buffer_limit(vertices); i = i + 3) {
    buffer_put(out, buffer_get(vertices, i));
    buffer_put(out, buffer_get(vertices, i + 1));
    buffer_put(out, buffer_get(vertices, i + 2));
  }
}
)";

void expect_trace_matches(const lang::CheckedProgram& cp, const BlockMap& bm, const ExecutionCase& c,
                          const RunConfig& cfg, const std::string& what) {
  const auto dict = build_dictionary(cp, bm);
  const auto log = run(cp, bm, c, cfg);
  ASSERT_FALSE(log.failed) << what << ": " << log.error;
  const auto expected = total_op_counts(log.block_ids, log.block_counts, dict);
  const auto traced = step_trace(cp, bm, c, cfg);
  for (std::size_t j = 0; j < expected.size(); ++j)
    EXPECT_EQ(traced[j], expected[j]) << what << " " << op_universe()[j].name;
}

}  // namespace

TEST(Run, CountedLoop) {
  const auto cp = compile(kCounted);
  const auto log = run(cp, one_frame(), entry("f"));
  ASSERT_FALSE(log.failed) << log.error;
  EXPECT_EQ(log.count("f().for_1"), 10);
  EXPECT_EQ(log.count("f().for_1.bool"), 11);
  EXPECT_EQ(log.count("f().for_1.init"), 1);
  EXPECT_EQ(log.count("f().for_1.update"), 10);
  EXPECT_EQ(log.count("f()"), 1);
}

TEST(Run, AblatedBodySkippedHeadersUnchanged) {
  const auto cp = compile(kCounted);
  const auto base = run(cp, one_frame(), entry("f"));
  const auto log = run(cp, one_frame({"f().for_1"}), entry("f"));
  EXPECT_EQ(log.count("f().for_1"), 0);
  EXPECT_EQ(log.count("f().for_1.bool"), 11);
  EXPECT_EQ(log.count("f().for_1.init"), 1);
  EXPECT_EQ(log.count("f().for_1.update"), 10);
  EXPECT_NE(log.output_digest, base.output_digest);
}

TEST(Run, RejectsHeaderAblation) {
  const auto cp = compile(kCounted);
  EXPECT_THROW(run(cp, one_frame({"f().for_1.init"}), entry("f")), Error);
  EXPECT_THROW(run(cp, one_frame({"f().for_1.bool"}), entry("f")), Error);
  EXPECT_THROW(run(cp, one_frame({"nope"}), entry("f")), Error);
}

TEST(Run, CopyLoopStrideThree) {
  const auto cp = compile(kCopyLoop);
  const auto log = run(cp, one_frame(), entry("blit"));
  ASSERT_FALSE(log.failed) << log.error;
  EXPECT_EQ(log.count("blit().for_1"), 704);
  EXPECT_EQ(log.count("blit().for_1.bool"), 705);
  EXPECT_EQ(log.count("init().for_1"), 2112);
}

TEST(Run, Deterministic) {
  const auto cp = compile(enerlyze::testing::random_program_source(3));
  const auto bm = divide_blocks(cp);
  CaseDesign d;
  d.n_cases = static_cast<int>(bm.ablatable().size()) + 3;
  d.frame_budget = 5;
  const auto cases = generate_cases(cp, bm, d);
  for (const auto& c : cases) {
    const auto a = run(cp, bm, c);
    const auto b = run(cp, bm, c);
    EXPECT_EQ(log_to_json(a), log_to_json(b));
  }
}

TEST(Run, RuntimeErrorNamesBlock) {
  const auto cp = compile("void f(){ int[] a = new int[2]; if (true) { a[5] = 1; } }");
  const auto log = run(cp, one_frame(), entry("f"));
  EXPECT_TRUE(log.failed);
  EXPECT_EQ(log.failed_block, "f().if_1");
  EXPECT_NE(log.error.find("bounds"), std::string::npos) << log.error;
}

TEST(Run, DivisionByZeroFails) {
  const auto cp = compile("void f(){ int z = 0; emit(1 / z); }");
  EXPECT_TRUE(run(cp, one_frame(), entry("f")).failed);
}

TEST(Run, NullDereferenceFails) {
  const auto cp = compile("record R { int a; } void f(){ R r; emit(r.a); }");
  EXPECT_TRUE(run(cp, one_frame(), entry("f")).failed);
}

TEST(Run, StepBudget) {
  const auto cp = compile("void f(){ int w = 0; while (w < 1) { w = 0; } }");
  RunConfig cfg = entry("f");
  cfg.max_steps = 1000;
  const auto log = run(cp, one_frame(), cfg);
  EXPECT_TRUE(log.failed);
  EXPECT_EQ(log.failed_block, "f().while_1");
}

TEST(Run, IntegerAndConversionSemantics) {
  // Each program emits one value; compare against a program that emits the
  // expected literal.
  const std::pair<const char*, const char*> cases[] = {
      {"9223372036854775807 + 1", "-9223372036854775808"},
      {"-9223372036854775808 / -1", "-9223372036854775808"},
      {"1 << 65", "2"},
      {"-16 >> 2", "-4"},
      {"(int) 1e300", "9223372036854775807"},
      {"(int) -2.7", "-2"},
      {"7 / -2", "-3"},
      {"math_floor(-2.5)", "-3"},
  };
  for (const auto& [expr, lit] : cases) {
    const auto a = run(compile(std::string("void f(){ emit(") + expr + "); }"), one_frame(), entry("f"));
    const auto b = run(compile(std::string("void f(){ emit(") + lit + "); }"), one_frame(), entry("f"));
    ASSERT_FALSE(a.failed) << expr << ": " << a.error;
    EXPECT_EQ(a.output_digest, b.output_digest) << expr;
  }
  const auto nan = run(compile("void f(){ float z = 0.0; emit((int) (z / z)); }"), one_frame(), entry("f"));
  const auto zero = run(compile("void f(){ emit(0); }"), one_frame(), entry("f"));
  EXPECT_EQ(nan.output_digest, zero.output_digest);
}

TEST(Run, FramesUseInputs) {
  const auto cp = compile("global int total; void frame(int x, bool b){ if (b) { total = total + x; } emit(total); }");
  ExecutionCase c;
  c.case_id = "t";
  c.frame_budget = 4;
  c.inputs = {{0, {5, 1}}, {2, {1, 0}}};
  const auto log = run(cp, c);
  ASSERT_FALSE(log.failed) << log.error;
  EXPECT_EQ(log.count("frame()"), 4);
  EXPECT_EQ(log.count("frame().if_1"), 2);
  ExecutionCase other = c;
  other.inputs = {{0, {5, 1}}, {2, {1, 1}}};
  EXPECT_NE(run(cp, other).output_digest, log.output_digest);
}

TEST(Run, StateDigestIgnoresAllocationOrder) {
  const auto a = compile("record R { int v; } global R x; global R y; "
                         "void f(){ x = new R(); y = new R(); x.v = 1; y.v = 2; }");
  const auto b = compile("record R { int v; } global R x; global R y; "
                         "void f(){ y = new R(); x = new R(); x.v = 1; y.v = 2; }");
  EXPECT_EQ(run(a, one_frame(), entry("f")).state_digest, run(b, one_frame(), entry("f")).state_digest);
}

TEST(StepTrace, EmptyProgram) {
  const auto cp = compile("void f(){}");
  const auto t = step_trace(cp, divide_blocks(cp), one_frame(), entry("f"));
  for (auto v : t) EXPECT_EQ(v, 0);
}

TEST(StepTrace, SingleStatement) {
  const auto cp = compile("void f(){ int x = 1; }");
  const auto t = step_trace(cp, divide_blocks(cp), one_frame(), entry("f"));
  std::map<std::string, std::int64_t> nz;
  for (std::size_t j = 0; j < t.size(); ++j)
    if (t[j]) nz[op_universe()[j].name] = t[j];
  const std::map<std::string, std::int64_t> expected = {{"Declaration_int", 1}, {"Assign_int_int", 1}};
  EXPECT_EQ(nz, expected);
}

TEST(StepTrace, SmallPrograms) {
  const char* programs[] = {
      kCounted,
      "void f(){ int x = 0; while (x < 4) { x++; if (x == 2) { break; } } switch (x) { case 2: { emit(1); } "
      "default: { emit(0); } } }",
      "int g(int a, float b){ if (a > 1) { return a; } return (int) b; } void f(){ emit(g(3, 1.5) + g(0, 2.5)); }",
      "void f(){ for (int i = 0; i < 6; i++) { if (i == 4) { return; } emit(i); } emit(9); }",
  };
  for (const char* src : programs) {
    const auto cp = compile(src);
    expect_trace_matches(cp, divide_blocks(cp), one_frame(), entry("f"), src);
  }
}

TEST(StepTrace, EqualsDictionaryOnRandomPrograms) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto cp = compile(enerlyze::testing::random_program_source(seed));
    const auto bm = divide_blocks(cp);
    CaseDesign d;
    d.seed = seed;
    d.frame_budget = 3;
    d.n_cases = static_cast<int>(bm.ablatable().size()) + 2;
    for (const auto& c : generate_cases(cp, bm, d))
      expect_trace_matches(cp, bm, c, {}, "seed " + std::to_string(seed) + " " + c.case_id);
  }
}

TEST(StepTrace, EqualsDictionaryOnBenchmarks) {
  for (const char* name : {"clickmove.esrc", "orbit.esrc", "waves.esrc"}) {
    const auto cp = compile(read_file(std::string(ENERLYZE_BENCHMARK_DIR) + "/" + name));
    const auto bm = divide_blocks(cp);
    CaseDesign d;
    d.frame_budget = 4;
    d.n_cases = static_cast<int>(bm.ablatable().size()) + 3;
    for (const auto& c : generate_cases(cp, bm, d)) expect_trace_matches(cp, bm, c, {}, name + (" " + c.case_id));
  }
}

TEST(Cases, CoverOnce) {
  const auto cp = compile(
      "void frame(int x){ if (x > 1) {} if (x > 2) {} if (x > 3) {} if (x > 4) {} "
      "if (x > 5) {} if (x > 6) {} if (x > 7) {} else {} }");
  const auto bm = divide_blocks(cp);
  ASSERT_EQ(bm.ablatable().size(), 8u);
  CaseDesign d;
  d.n_cases = 16;
  d.policy = AblationPolicy::CoverOnce;
  const auto cases = generate_cases(cp, bm, d);
  ASSERT_EQ(cases.size(), 16u);
  EXPECT_TRUE(cases[0].ablated_blocks.empty());
  EXPECT_EQ(cases[0].case_id, "case_0000");
  std::set<std::string> ablated;
  for (const auto& c : cases) ablated.insert(c.ablated_blocks.begin(), c.ablated_blocks.end());
  EXPECT_EQ(ablated.size(), 8u);
}

TEST(Cases, RandomKCoversAndKeepsBaseline) {
  const auto cp = compile(enerlyze::testing::random_program_source(9));
  const auto bm = divide_blocks(cp);
  CaseDesign d;
  d.n_cases = 30;
  const auto cases = generate_cases(cp, bm, d);
  std::set<std::string> ablated;
  for (const auto& c : cases) ablated.insert(c.ablated_blocks.begin(), c.ablated_blocks.end());
  EXPECT_EQ(ablated.size(), bm.ablatable().size());
  EXPECT_TRUE(cases[0].ablated_blocks.empty());
  std::set<std::string> inputs;
  for (const auto& c : cases) inputs.insert(case_to_json(c)["inputs"].dump());
  EXPECT_GT(inputs.size(), 1u);
}

TEST(Cases, TooFewCasesNamesBlocks) {
  const auto cp = compile("void frame(int x){ if (x > 1) {} if (x > 2) {} }");
  const auto bm = divide_blocks(cp);
  CaseDesign d;
  d.n_cases = 1;
  try {
    generate_cases(cp, bm, d);
    FAIL() << "expected a coverage error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("frame().if_1"), std::string::npos) << e.what();
  }
}

TEST(Cases, DeterministicAndJsonRoundTrip) {
  const auto cp = compile(enerlyze::testing::random_program_source(4));
  const auto bm = divide_blocks(cp);
  CaseDesign d;
  d.n_cases = 200;
  const auto a = generate_cases(cp, bm, d);
  const auto b = generate_cases(cp, bm, d);
  EXPECT_EQ(a, b);
  EXPECT_EQ(cases_from_json(cases_to_json(a)), a);
  EXPECT_EQ(cases_to_json(a).dump(), cases_to_json(b).dump());
}

TEST(Logs, JsonlRoundTrip) {
  const auto cp = compile(kCounted);
  std::vector<ExecutionLog> logs = {run(cp, one_frame(), entry("f")), run(cp, one_frame({"f().for_1"}), entry("f"))};
  const auto back = logs_from_jsonl(logs_to_jsonl(logs));
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(log_to_json(back[i]), log_to_json(logs[i]));
}

TEST(Logs, RunAllMatchesSerial) {
  const auto cp = compile(enerlyze::testing::random_program_source(12));
  const auto bm = divide_blocks(cp);
  CaseDesign d;
  d.n_cases = 12;
  d.frame_budget = 4;
  const auto cases = generate_cases(cp, bm, d);
  const auto par = run_all(cp, bm, cases, {}, 4);
  for (std::size_t i = 0; i < cases.size(); ++i) EXPECT_EQ(log_to_json(par[i]), log_to_json(run(cp, bm, cases[i])));
}
