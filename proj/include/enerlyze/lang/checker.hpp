#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "enerlyze/lang/ast.hpp"

namespace enerlyze::lang {

/// A program whose every expression carries a static type and whose
/// identifiers are resolved to slots, globals, fields, methods or library
/// functions. Immutable once built; share it freely between threads.
class CheckedProgram {
 public:
  const Program& program() const { return d_->program; }
  const MethodDecl& method(int index) const { return d_->program.methods[static_cast<std::size_t>(index)]; }
  int method_count() const { return static_cast<int>(d_->program.methods.size()); }
  int record_index(const std::string& name) const;
  const RecordDecl& record(int index) const { return d_->program.records[static_cast<std::size_t>(index)]; }
  /// One past the largest statement id.
  int stmt_count() const { return static_cast<int>(d_->stmts.size()); }
  /// Statement by id (ids are dense, assigned in source order).
  const Stmt& stmt(int id) const { return *d_->stmts[static_cast<std::size_t>(id)]; }
  /// Method owning the statement with this id.
  int stmt_method(int id) const { return d_->stmt_method[static_cast<std::size_t>(id)]; }

 private:
  friend CheckedProgram check(Program program);
  // Shared so that copies stay cheap and the statement pointers stay valid.
  struct Data {
    Program program;
    std::vector<const Stmt*> stmts;
    std::vector<int> stmt_method;
  };
  std::shared_ptr<const Data> d_;
};

/// Type-checks and annotates. Throws TypeError (type mismatch, arity
/// mismatch, unresolved identifier, misplaced break, unreachable statement,
/// missing return).
CheckedProgram check(Program program);

/// AST as JSON: {kind, span:{line,column}, type?, ...attributes, children}.
nlohmann::json ast_to_json(const Program& program);

}  // namespace enerlyze::lang
