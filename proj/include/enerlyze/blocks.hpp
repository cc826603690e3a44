#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "enerlyze/lang/checker.hpp"

namespace enerlyze {

enum class OpCategory {
  Arithmetic,
  Boolean,
  Comparison,
  Bitwise,
  Reference,
  Function,
  Control,
  Assign,
  Declaration,
  Conversion,
  Library,
};

const char* to_string(OpCategory c);

/// Category as shown in grouped profile views: Array, Boolean (with
/// comparisons), Arithmetic (with bitwise and conversions) and the rest as is.
std::string group_of(OpCategory c);
/// The grouped view's column order.
std::span<const std::string> group_names();

struct OperationKind {
  OpCategory category;
  /// Unique name, e.g. "Addition_int_int", "Equal_Object_null",
  /// "Library_list_get".
  std::string name;
};

/// The fixed, ordered operation universe (category x operand signature over
/// the language, plus one entry per library function).
std::span<const OperationKind> op_universe();
std::optional<int> find_op(std::string_view name);
/// Like find_op but throws for unknown names.
int op_id(std::string_view name);

using OpCountVector = std::vector<std::int64_t>;

namespace ops {
// Operation ids for individual AST nodes. -1 means the node carries no
// operation of its own (literals, variable reads).
int of_expr(const lang::Expr& e);
int of_declaration(const lang::Stmt& s);
int of_assign(const lang::Type& target, const lang::Type& value);
int of_return(const lang::Type& method_return);
int parameter(const lang::Type& param);
int method_invocation();
int block_goto_if();
int block_goto_for();
int block_goto_while();
int block_goto_switch();
int increment();
int decrement();
}  // namespace ops

enum class BlockKind {
  Entry,
  IfBody,
  ElseBody,
  ForInit,
  ForBoolean,
  ForUpdate,
  LoopBody,
  WhileHeader,
  SwitchArm,
  Continuation,
};

enum class EdgeKind { Branch, Seq, Back };

const char* to_string(BlockKind k);
const char* to_string(EdgeKind k);

struct Block {
  std::string id;
  BlockKind kind = BlockKind::Entry;
  int method = -1;
  /// Statements whose own operations are attributed to this block, in order.
  std::vector<int> stmts;
  /// Block holding the construct that owns this block's statement list (-1
  /// for method entries). Continuations point at the head of their list.
  int parent = -1;
  /// If/else bodies, switch arms and bodies of for loops with an update;
  /// ablating one skips its whole statement list including continuation
  /// segments.
  bool ablatable = false;
  SourcePos pos;
};

struct Edge {
  int from = -1;
  int to = -1;
  EdgeKind kind = EdgeKind::Seq;
};

/// Block division of a checked program plus the per-statement indices the
/// interpreter needs to log block entries.
class BlockMap {
 public:
  std::vector<Block> blocks;
  std::vector<Edge> edges;

  // Indexed by statement id; -1 where not applicable.
  std::vector<int> stmt_block;   // block owning the statement's own operations
  std::vector<int> cont_block;   // continuation block starting at this statement
  std::vector<int> then_block;   // If
  std::vector<int> else_block;   // If with else
  std::vector<int> init_block;   // For
  std::vector<int> cond_block;   // For boolean, While header
  std::vector<int> update_block; // For
  std::vector<int> body_block;   // For, While
  std::vector<std::vector<int>> arm_blocks;  // Switch, parallel to arms
  // Indexed by method.
  std::vector<int> method_entry;

  int size() const { return static_cast<int>(blocks.size()); }
  std::optional<int> find(std::string_view id) const;
  int index_of(std::string_view id) const;  // throws on unknown ids
  std::vector<std::string> ids() const;
  std::vector<int> ablatable() const;
  /// Rebuilds the id lookup after `blocks` changed; throws on duplicates.
  void reindex();

 private:
  std::unordered_map<std::string, int> by_id_;
};

BlockMap divide_blocks(const lang::CheckedProgram& program);

/// O[i,j]: static occurrence count of operation j in block i.
struct OperationDictionary {
  std::vector<std::string> block_ids;
  std::vector<OpCountVector> counts;  // [block][op], op order = op_universe()

  int block_count() const { return static_cast<int>(block_ids.size()); }
  std::optional<int> find(std::string_view id) const;
};

OperationDictionary build_dictionary(const lang::CheckedProgram& program, const BlockMap& blocks);

/// N_e(op_j) = sum_i B[i] * O[i,j]. `block_ids`/`block_counts` are parallel;
/// throws for ids missing from the dictionary.
OpCountVector total_op_counts(std::span<const std::string> block_ids, std::span<const std::int64_t> block_counts,
                              const OperationDictionary& dict);

nlohmann::json dictionary_to_json(const OperationDictionary& dict);
OperationDictionary dictionary_from_json(const nlohmann::json& j);
std::string dictionary_to_csv(const OperationDictionary& dict);
nlohmann::json blockmap_to_json(const BlockMap& blocks);

/// Op counts as {name: count}, non-zero entries only.
nlohmann::json op_counts_to_json(const OpCountVector& counts);
OpCountVector op_counts_from_json(const nlohmann::json& j);

}  // namespace enerlyze
