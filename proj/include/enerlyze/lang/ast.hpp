#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "enerlyze/common.hpp"

namespace enerlyze::lang {

enum class TypeKind { Void, Int, Float, Bool, Object, IntArray, FloatArray, CharArray, Null };

/// A static type. Objects optionally carry the record they were declared as;
/// an empty `record` is the opaque `Object` type (lists, buffers, any record).
struct Type {
  TypeKind kind = TypeKind::Void;
  std::string record;

  static Type of(TypeKind k) { return Type{k, {}}; }
  static Type object(std::string rec = {}) { return Type{TypeKind::Object, std::move(rec)}; }

  bool is_numeric() const { return kind == TypeKind::Int || kind == TypeKind::Float; }
  bool is_array() const {
    return kind == TypeKind::IntArray || kind == TypeKind::FloatArray || kind == TypeKind::CharArray;
  }
  bool is_reference() const { return kind == TypeKind::Object || is_array(); }
  bool is_scalar() const { return kind == TypeKind::Int || kind == TypeKind::Float || kind == TypeKind::Bool; }

  friend bool operator==(const Type&, const Type&) = default;
};

/// Operand-signature spelling used in operation names: int, float, bool,
/// Object, int[], float[], char[], null, void.
std::string signature(const Type& t);
/// Source spelling: like `signature` but records keep their declared name.
std::string spelling(const Type& t);

enum class ExprKind { IntLit, FloatLit, BoolLit, NullLit, Var, Field, Index, Unary, Binary, Cast, Call, NewRecord, NewArray };

enum class BinaryOp { Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or, BitAnd, BitOr, Shl, Shr };
enum class UnaryOp { Neg, Not };

const char* to_string(BinaryOp op);
const char* to_string(UnaryOp op);
const char* to_string(ExprKind k);

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  SourcePos pos;

  std::int64_t int_value = 0;
  double float_value = 0.0;
  bool bool_value = false;
  /// Var: variable name; Field: field name; Call: callee; NewRecord: record name.
  std::string name;
  BinaryOp binary_op = BinaryOp::Add;
  UnaryOp unary_op = UnaryOp::Neg;
  /// Cast target type, or the array type created by NewArray.
  Type target;
  /// Field: [object]; Index: [array, index]; Unary/Cast: [operand];
  /// Binary: [lhs, rhs]; Call: arguments; NewArray: [length].
  std::vector<Expr> operands;

  // Annotations filled in by the checker.
  Type type;
  int slot = -1;         // Var resolved to a local
  int global = -1;       // Var resolved to a global
  int field_index = -1;  // Field
  int method = -1;       // Call to a user method
  int library = -1;      // Call to a library function

  static Expr int_lit(std::int64_t v, SourcePos p = {});
  static Expr float_lit(double v, SourcePos p = {});
  static Expr bool_lit(bool v, SourcePos p = {});
  static Expr null_lit(SourcePos p = {});
  static Expr var(std::string name, SourcePos p = {});
  static Expr field(Expr object, std::string name, SourcePos p = {});
  static Expr index(Expr array, Expr idx, SourcePos p = {});
  static Expr unary(UnaryOp op, Expr x, SourcePos p = {});
  static Expr binary(BinaryOp op, Expr l, Expr r, SourcePos p = {});
  static Expr call(std::string callee, std::vector<Expr> args, SourcePos p = {});
};

enum class StmtKind { VarDecl, Assign, IncDec, If, For, While, Switch, Call, Return, Break };

const char* to_string(StmtKind k);

struct Stmt;

struct SwitchArm {
  bool is_default = false;
  std::int64_t value = 0;
  SourcePos pos;
  std::vector<Stmt> body;
};

struct Stmt {
  StmtKind kind = StmtKind::Call;
  SourcePos pos;
  /// Stable per-program statement index assigned by the checker.
  int id = -1;

  // VarDecl
  Type decl_type;
  std::string name;
  int slot = -1;

  /// VarDecl: [init]?; Assign: [target, value]; IncDec: [target];
  /// If/While/For: [condition]; Switch: [scrutinee]; Call: [call];
  /// Return: [value]?
  std::vector<Expr> exprs;
  bool increment = true;  // IncDec

  std::vector<Stmt> body;       // If then-branch, loop body
  std::vector<Stmt> else_body;  // If
  bool has_else = false;
  std::vector<Stmt> init;    // For: 0 or 1 statement
  std::vector<Stmt> update;  // For: 0 or 1 statement
  std::vector<SwitchArm> arms;

  static Stmt var_decl(Type t, std::string name, std::vector<Expr> init = {}, SourcePos p = {});
  static Stmt assign(Expr target, Expr value, SourcePos p = {});
  static Stmt call_stmt(Expr call, SourcePos p = {});
  static Stmt ret(std::vector<Expr> value = {}, SourcePos p = {});
};

struct Param {
  Type type;
  std::string name;
  SourcePos pos;
};

struct RecordDecl {
  std::string name;
  std::vector<Param> fields;
  SourcePos pos;
};

struct GlobalDecl {
  Type type;
  std::string name;
  SourcePos pos;
};

struct MethodDecl {
  std::string name;
  Type return_type;
  std::vector<Param> params;
  std::vector<Stmt> body;
  SourcePos pos;
  int num_slots = 0;  // checker annotation
};

struct Program {
  std::vector<RecordDecl> records;
  std::vector<GlobalDecl> globals;
  std::vector<MethodDecl> methods;

  const MethodDecl* find_method(const std::string& name) const;
  int method_index(const std::string& name) const;
  const RecordDecl* find_record(const std::string& name) const;
};

/// Structural equality: ignores source positions and checker annotations.
bool structurally_equal(const Expr& a, const Expr& b);
bool structurally_equal(const Stmt& a, const Stmt& b);
bool structurally_equal(const std::vector<Stmt>& a, const std::vector<Stmt>& b);
bool structurally_equal(const Program& a, const Program& b);

}  // namespace enerlyze::lang
