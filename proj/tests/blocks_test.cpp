#include <gtest/gtest.h>

#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "enerlyze/blocks.hpp"
#include "enerlyze/lang/parser.hpp"
#include "support/random_program.hpp"

using namespace enerlyze;

namespace {

lang::CheckedProgram compile(const std::string& src) { return lang::check(lang::parse_source(src)); }

std::int64_t count(const OperationDictionary& d, const std::string& block, const std::string& op) {
  return d.counts[static_cast<std::size_t>(*d.find(block))][static_cast<std::size_t>(op_id(op))];
}

std::map<std::string, std::int64_t> nonzero(const OpCountVector& row) {
  std::map<std::string, std::int64_t> m;
  for (std::size_t j = 0; j < row.size(); ++j)
    if (row[j]) m[op_universe()[j].name] = row[j];
  return m;
}

constexpr const char* kProgram1 = R"(
record Node {
  Object children;
}

void draw(Node n) {
  emit(1);
}

void visit(Node n) {
  if (n.children != null) {
    emit(2);
  }
  draw(n);
  if (n.children != null) {
    emit(3);
  }
}
)";

constexpr const char* kProgram9 = R"(
void update(int w, int h) {
  for (int i = 0; i < w; i++) {
    for (int j = 0; j < h; j++) {
      emit(i * j);
    }
  }
}
)";

}  // namespace

TEST(Universe, UniqueAndCategorized) {
  std::set<std::string> names;
  for (const auto& op : op_universe()) EXPECT_TRUE(names.insert(op.name).second) << op.name;
  for (const char* n : {"MethodInvocation", "BlockGoto_if", "BlockGoto_for", "BlockGoto_while", "FieldReference"})
    EXPECT_EQ(op_universe()[static_cast<std::size_t>(op_id(n))].category, OpCategory::Control) << n;
  EXPECT_EQ(op_universe()[static_cast<std::size_t>(op_id("Library_buffer_bulk_put"))].category, OpCategory::Library);
  EXPECT_FALSE(find_op("Addition_bool_bool"));
}

TEST(Divide, StraightLineIsOneBlock) {
  const auto cp = compile("void f(){int x = 1; x = x + 2; emit(x);}");
  const auto bm = divide_blocks(cp);
  ASSERT_EQ(bm.size(), 1);
  EXPECT_EQ(bm.blocks[0].id, "f()");
  EXPECT_EQ(bm.blocks[0].kind, BlockKind::Entry);
  EXPECT_TRUE(bm.edges.empty());
}

TEST(Divide, IfElseThreeBlocksTwoBranchEdges) {
  const auto cp = compile("void f(int x){ if (x > 0) { emit(1); } else { emit(2); } }");
  const auto bm = divide_blocks(cp);
  ASSERT_EQ(bm.size(), 3);
  EXPECT_EQ(bm.blocks[1].id, "f().if_1");
  EXPECT_EQ(bm.blocks[2].id, "f().if_1.else");
  ASSERT_EQ(bm.edges.size(), 2u);
  for (const auto& e : bm.edges) {
    EXPECT_EQ(e.kind, EdgeKind::Branch);
    EXPECT_EQ(e.from, 0);
  }
}

TEST(Divide, NestedForLoops) {
  const auto bm = divide_blocks(compile(kProgram9));
  const std::vector<std::string> expected = {
      "update()",         "update().for_1.init",       "update().for_1.bool",       "update().for_1.update",
      "update().for_1",   "update().for_1.for_1.init", "update().for_1.for_1.bool", "update().for_1.for_1.update",
      "update().for_1.for_1"};
  EXPECT_EQ(bm.ids(), expected);
  EXPECT_EQ(bm.blocks[static_cast<std::size_t>(bm.index_of("update().for_1.for_1"))].parent,
            bm.index_of("update().for_1"));
  EXPECT_EQ(bm.blocks[1].kind, BlockKind::ForInit);
  EXPECT_EQ(bm.blocks[2].kind, BlockKind::ForBoolean);
  EXPECT_EQ(bm.blocks[3].kind, BlockKind::ForUpdate);
  EXPECT_EQ(bm.blocks[4].kind, BlockKind::LoopBody);
}

TEST(Divide, EveryStatementInExactlyOneBlock) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cp = compile(enerlyze::testing::random_program_source(seed));
    const auto bm = divide_blocks(cp);
    std::vector<int> seen(static_cast<std::size_t>(cp.stmt_count()), 0);
    for (const auto& b : bm.blocks)
      for (int s : b.stmts) ++seen[static_cast<std::size_t>(s)];
    for (int s = 0; s < cp.stmt_count(); ++s) EXPECT_EQ(seen[static_cast<std::size_t>(s)], 1) << s;
  }
}

TEST(Divide, IdsDeterministicAcrossReparse) {
  const std::string src = enerlyze::testing::random_program_source(11);
  const auto a = divide_blocks(compile(src));
  const auto b = divide_blocks(compile(lang::pretty_print(lang::parse_source(src))));
  EXPECT_EQ(a.ids(), b.ids());
}

TEST(Divide, EarlyExitSplitsIntoContinuation) {
  const auto bm = divide_blocks(compile(
      "void f(int x){ if (x > 0) { return; } emit(x); for (int i = 0; i < 3; i++) { if (i == x) { break; } "
      "emit(i); } }"));
  EXPECT_TRUE(bm.find("f().cont_1"));
  EXPECT_TRUE(bm.find("f().for_1.cont_1"));
  // The loop is numbered within the whole list, not the continuation.
  EXPECT_TRUE(bm.find("f().for_1"));
  EXPECT_FALSE(bm.blocks[static_cast<std::size_t>(bm.index_of("f().cont_1"))].ablatable);
}

TEST(Divide, WhileAndSwitch) {
  const auto bm = divide_blocks(compile(
      "void f(int x){ int w = 0; while (w < 3) { w++; } switch (x) { case -1: { emit(1); } default: {} } }"));
  for (const char* id : {"f().while_1.header", "f().while_1", "f().switch_1.case_-1", "f().switch_1.default"})
    EXPECT_TRUE(bm.find(id)) << id;
  // While bodies are not ablatable: skipping one would stall its loop.
  EXPECT_EQ(bm.ablatable().size(), 2u);
  EXPECT_FALSE(bm.blocks[static_cast<std::size_t>(bm.index_of("f().while_1"))].ablatable);
}

TEST(Dictionary, DirectCount) {
  const auto cp = compile("void f(int a, int b){ int v; if (true) { v = a + b; v = a + b; } }");
  const auto d = build_dictionary(cp, divide_blocks(cp));
  const std::map<std::string, std::int64_t> expected = {{"Addition_int_int", 2}, {"Assign_int_int", 2}};
  EXPECT_EQ(nonzero(d.counts[1]), expected);
}

TEST(Dictionary, Program1EntryRegion) {
  const auto cp = compile(kProgram1);
  const auto d = build_dictionary(cp, divide_blocks(cp));
  EXPECT_EQ(count(d, "visit()", "Equal_Object_null"), 2);
  EXPECT_EQ(count(d, "visit()", "MethodInvocation"), 1);
  EXPECT_EQ(count(d, "visit()", "Parameter_Object"), 1);
  EXPECT_EQ(count(d, "visit()", "BlockGoto_if"), 2);
  EXPECT_EQ(count(d, "visit()", "FieldReference"), 2);
}

TEST(Dictionary, EmptyBlockIsZeroRow) {
  const auto cp = compile("void f(int x){ if (x > 0) {} }");
  const auto d = build_dictionary(cp, divide_blocks(cp));
  EXPECT_TRUE(nonzero(d.counts[1]).empty());
}

TEST(Dictionary, HeaderAttribution) {
  const auto cp = compile(kProgram9);
  const auto d = build_dictionary(cp, divide_blocks(cp));
  EXPECT_EQ(count(d, "update().for_1.bool", "Less_int_int"), 1);
  EXPECT_EQ(count(d, "update().for_1.init", "Declaration_int"), 1);
  EXPECT_EQ(count(d, "update().for_1.init", "Assign_int_int"), 1);
  EXPECT_EQ(count(d, "update().for_1.update", "Increment"), 1);
  EXPECT_EQ(count(d, "update().for_1", "BlockGoto_for"), 1);
  EXPECT_EQ(count(d, "update().for_1.for_1", "Multi_int_int"), 1);
  EXPECT_EQ(count(d, "update().for_1.for_1", "Library_emit"), 1);
}

TEST(Dictionary, NonEmptyBlocksHaveOperations) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cp = compile(enerlyze::testing::random_program_source(seed));
    const auto bm = divide_blocks(cp);
    const auto d = build_dictionary(cp, bm);
    for (int i = 0; i < bm.size(); ++i) {
      const auto& b = bm.blocks[static_cast<std::size_t>(i)];
      // Break carries no operation and a loop's own operations live in its
      // header and body blocks, so neither makes a block non-empty.
      bool has_ops = false;
      for (int s : b.stmts) {
        const auto k = cp.stmt(s).kind;
        has_ops |= k != lang::StmtKind::Break && k != lang::StmtKind::For && k != lang::StmtKind::While;
      }
      if (!has_ops) continue;
      std::int64_t sum = 0;
      for (auto c : d.counts[static_cast<std::size_t>(i)]) sum += c;
      EXPECT_GE(sum, 1) << b.id;
    }
  }
}

TEST(Dictionary, RecomputeIdentical) {
  const auto cp = compile(enerlyze::testing::random_program_source(5));
  const auto bm = divide_blocks(cp);
  EXPECT_EQ(build_dictionary(cp, bm).counts, build_dictionary(cp, bm).counts);
}

TEST(Dictionary, JsonAndCsv) {
  const auto cp = compile(kProgram1);
  const auto d = build_dictionary(cp, divide_blocks(cp));
  const auto j = dictionary_to_json(d);
  EXPECT_EQ(j["visit()"]["BlockGoto_if"], 2);
  const auto back = dictionary_from_json(j);
  for (std::size_t i = 0; i < d.block_ids.size(); ++i)
    EXPECT_EQ(back.counts[static_cast<std::size_t>(*back.find(d.block_ids[i]))], d.counts[i]);
  const std::string csv = dictionary_to_csv(d);
  EXPECT_EQ(csv.substr(0, 9), "block_id,");
  EXPECT_NE(csv.find("\nvisit(),"), std::string::npos);
}

TEST(TotalOpCounts, Linearity) {
  const auto cp = compile("void f(int x){ if (x > 0) { x++; x++; } }");
  const auto d = build_dictionary(cp, divide_blocks(cp));
  const std::vector<std::string> ids = {"f().if_1"};
  const std::vector<std::int64_t> b = {3};
  EXPECT_EQ(total_op_counts(ids, b, d)[static_cast<std::size_t>(op_id("Increment"))], 6);
}

TEST(TotalOpCounts, ZeroAndSum) {
  const auto cp = compile("void f(int x){ x++; if (x > 0) { x++; } }");
  const auto d = build_dictionary(cp, divide_blocks(cp));
  const std::vector<std::int64_t> zeros(d.block_ids.size(), 0);
  for (auto v : total_op_counts(d.block_ids, zeros, d)) EXPECT_EQ(v, 0);
  const std::vector<std::int64_t> counts = {2, 5};
  EXPECT_EQ(total_op_counts(d.block_ids, counts, d)[static_cast<std::size_t>(op_id("Increment"))], 7);
}

TEST(TotalOpCounts, UnknownBlock) {
  const auto cp = compile("void f(){}");
  const auto d = build_dictionary(cp, divide_blocks(cp));
  const std::vector<std::string> ids = {"g()"};
  const std::vector<std::int64_t> b = {1};
  EXPECT_THROW(total_op_counts(ids, b, d), Error);
}
