#pragma once

// Helpers shared by the refactoring transforms: AST traversal, read/write
// sets, constant evaluation and fresh names. They work on checked programs,
// whose annotations (slots, globals, callees) stay valid in copies.

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "enerlyze/lang/checker.hpp"

namespace enerlyze::opt {

using lang::Expr;
using lang::MethodDecl;
using lang::Program;
using lang::Stmt;

/// Visits every expression node (pre-order), including nested statements.
void for_each_expr(const Expr& e, const std::function<void(const Expr&)>& f);
void for_each_expr(const Stmt& s, const std::function<void(const Expr&)>& f);
void for_each_expr_mut(Expr& e, const std::function<void(Expr&)>& f);
void for_each_expr_mut(Stmt& s, const std::function<void(Expr&)>& f);
/// Visits statements (pre-order) including init/update/bodies/arms.
void for_each_stmt(const std::vector<Stmt>& list, const std::function<void(const Stmt&)>& f);
void for_each_stmt_mut(std::vector<Stmt>& list, const std::function<void(Stmt&)>& f);

int count_statements(const std::vector<Stmt>& list);

/// Locates the statement with checker id `id`: the list holding it and its
/// index there.
struct StmtRef {
  std::vector<Stmt>* list = nullptr;
  std::size_t index = 0;
  Stmt& get() const { return (*list)[index]; }
};
std::optional<StmtRef> find_stmt(Program& p, int id);

/// The For/While statement whose body block has this id.
std::optional<int> loop_stmt_for_block(const lang::CheckedProgram& cp, const std::string& block_id);

struct Effects {
  std::set<int> locals;  // slots of the current method
  std::set<int> globals;
  std::set<std::string> fields;
  bool arrays = false;    // array elements
  unsigned state = 0;     // lang::StateClass bits other than output/heap
  bool output = false;
  bool alloc = false;

  void merge(const Effects& o);
  bool empty() const;
  /// Shared location between a write set and a read set.
  bool intersects(const Effects& reads) const;
};

struct EffectPair {
  Effects reads;
  Effects writes;
  void merge(const EffectPair& o) {
    reads.merge(o.reads);
    writes.merge(o.writes);
  }
};

/// Read/write sets with interprocedural method summaries. Buffer capacity and
/// array length never change, so buffer_limit and array_length read no state.
class EffectAnalysis {
 public:
  explicit EffectAnalysis(const Program& p);

  EffectPair expr(const Expr& e) const;
  EffectPair stmt(const Stmt& s) const;
  EffectPair stmts(const std::vector<Stmt>& list) const;
  /// Summary of a call: callee-local slots are dropped.
  const EffectPair& method(int index) const { return summaries_[static_cast<std::size_t>(index)]; }
  /// Calls itself directly or through other methods.
  bool recursive(int index) const;
  /// Methods reachable by calls from `index`.
  const std::set<int>& callees(int index) const { return reach_[static_cast<std::size_t>(index)]; }

  /// No writes of any kind (so no output and no allocation).
  bool pure(const Expr& e) const;

 private:
  void add_expr(const Expr& e, EffectPair& out) const;
  void add_stmt(const Stmt& s, EffectPair& out) const;

  const Program& p_;
  std::vector<EffectPair> summaries_;
  std::vector<std::set<int>> reach_;
};

/// True when the expression calls a user method anywhere.
bool calls_user_method(const Expr& e);
/// Number of operations the expression executes per evaluation (nodes that
/// carry an operation of their own).
int op_node_count(const Expr& e);
/// Sum of operation costs (uJ) over the expression's nodes.
double expr_cost(const Expr& e, const std::vector<double>& cost_uJ);

/// Integer value known when refactoring: literals, arithmetic on constants,
/// locals declared with a constant and never reassigned in `method`, and the
/// capacity of a global buffer (or array) every assignment of which
/// allocates the same constant size.
std::optional<std::int64_t> const_int(const Program& p, const MethodDecl& method, const Expr& e);

/// A global whose every assignment is `buffer_new(...)`, so two distinct such
/// globals never reference the same buffer.
bool unique_buffer_global(const Program& p, int global);

/// True when some statement in `method` assigns or increments local `slot`.
bool local_written(const MethodDecl& method, int slot);

/// Every identifier the program uses (records, globals, methods, params,
/// locals, fields), so that fresh names never collide or shadow.
std::set<std::string> used_names(const Program& p);
std::string fresh_name(const std::string& base, std::set<std::string>& used);

/// Names declared by VarDecl statements (all depths) of a statement list.
std::set<std::string> declared_names(const std::vector<Stmt>& list);

/// pretty_print -> parse_source -> check; throws Error("internal") when a
/// transform produced an invalid program.
lang::CheckedProgram recheck(const Program& p);

}  // namespace enerlyze::opt
