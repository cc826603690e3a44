#include "enerlyze/lang/ast.hpp"

#include <cmath>
#include <cstdio>

namespace enerlyze {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace enerlyze

namespace enerlyze::lang {

std::string signature(const Type& t) {
  switch (t.kind) {
    case TypeKind::Void: return "void";
    case TypeKind::Int: return "int";
    case TypeKind::Float: return "float";
    case TypeKind::Bool: return "bool";
    case TypeKind::Object: return "Object";
    case TypeKind::IntArray: return "int[]";
    case TypeKind::FloatArray: return "float[]";
    case TypeKind::CharArray: return "char[]";
    case TypeKind::Null: return "null";
  }
  return "?";
}

std::string spelling(const Type& t) {
  if (t.kind == TypeKind::Object && !t.record.empty()) return t.record;
  return signature(t);
}

const char* to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
    case BinaryOp::BitAnd: return "&";
    case BinaryOp::BitOr: return "|";
    case BinaryOp::Shl: return "<<";
    case BinaryOp::Shr: return ">>";
  }
  return "?";
}

const char* to_string(UnaryOp op) { return op == UnaryOp::Neg ? "-" : "!"; }

const char* to_string(ExprKind k) {
  switch (k) {
    case ExprKind::IntLit: return "IntLiteral";
    case ExprKind::FloatLit: return "FloatLiteral";
    case ExprKind::BoolLit: return "BoolLiteral";
    case ExprKind::NullLit: return "NullLiteral";
    case ExprKind::Var: return "VarRef";
    case ExprKind::Field: return "FieldRef";
    case ExprKind::Index: return "ArrayRef";
    case ExprKind::Unary: return "Unary";
    case ExprKind::Binary: return "Binary";
    case ExprKind::Cast: return "Cast";
    case ExprKind::Call: return "Call";
    case ExprKind::NewRecord: return "NewRecord";
    case ExprKind::NewArray: return "NewArray";
  }
  return "?";
}

const char* to_string(StmtKind k) {
  switch (k) {
    case StmtKind::VarDecl: return "VarDecl";
    case StmtKind::Assign: return "Assign";
    case StmtKind::IncDec: return "IncDec";
    case StmtKind::If: return "If";
    case StmtKind::For: return "For";
    case StmtKind::While: return "While";
    case StmtKind::Switch: return "Switch";
    case StmtKind::Call: return "CallStmt";
    case StmtKind::Return: return "Return";
    case StmtKind::Break: return "Break";
  }
  return "?";
}

Expr Expr::int_lit(std::int64_t v, SourcePos p) {
  Expr e;
  e.kind = ExprKind::IntLit;
  e.int_value = v;
  e.pos = p;
  return e;
}

Expr Expr::float_lit(double v, SourcePos p) {
  Expr e;
  e.kind = ExprKind::FloatLit;
  e.float_value = v;
  e.pos = p;
  return e;
}

Expr Expr::bool_lit(bool v, SourcePos p) {
  Expr e;
  e.kind = ExprKind::BoolLit;
  e.bool_value = v;
  e.pos = p;
  return e;
}

Expr Expr::null_lit(SourcePos p) {
  Expr e;
  e.kind = ExprKind::NullLit;
  e.pos = p;
  return e;
}

Expr Expr::var(std::string name, SourcePos p) {
  Expr e;
  e.kind = ExprKind::Var;
  e.name = std::move(name);
  e.pos = p;
  return e;
}

Expr Expr::field(Expr object, std::string name, SourcePos p) {
  Expr e;
  e.kind = ExprKind::Field;
  e.name = std::move(name);
  e.operands.push_back(std::move(object));
  e.pos = p;
  return e;
}

Expr Expr::index(Expr array, Expr idx, SourcePos p) {
  Expr e;
  e.kind = ExprKind::Index;
  e.operands.push_back(std::move(array));
  e.operands.push_back(std::move(idx));
  e.pos = p;
  return e;
}

Expr Expr::unary(UnaryOp op, Expr x, SourcePos p) {
  Expr e;
  e.kind = ExprKind::Unary;
  e.unary_op = op;
  e.operands.push_back(std::move(x));
  e.pos = p;
  return e;
}

Expr Expr::binary(BinaryOp op, Expr l, Expr r, SourcePos p) {
  Expr e;
  e.kind = ExprKind::Binary;
  e.binary_op = op;
  e.operands.push_back(std::move(l));
  e.operands.push_back(std::move(r));
  e.pos = p;
  return e;
}

Expr Expr::call(std::string callee, std::vector<Expr> args, SourcePos p) {
  Expr e;
  e.kind = ExprKind::Call;
  e.name = std::move(callee);
  e.operands = std::move(args);
  e.pos = p;
  return e;
}

Stmt Stmt::var_decl(Type t, std::string name, std::vector<Expr> init, SourcePos p) {
  Stmt s;
  s.kind = StmtKind::VarDecl;
  s.decl_type = std::move(t);
  s.name = std::move(name);
  s.exprs = std::move(init);
  s.pos = p;
  return s;
}

Stmt Stmt::assign(Expr target, Expr value, SourcePos p) {
  Stmt s;
  s.kind = StmtKind::Assign;
  s.exprs.push_back(std::move(target));
  s.exprs.push_back(std::move(value));
  s.pos = p;
  return s;
}

Stmt Stmt::call_stmt(Expr call, SourcePos p) {
  Stmt s;
  s.kind = StmtKind::Call;
  s.exprs.push_back(std::move(call));
  s.pos = p;
  return s;
}

Stmt Stmt::ret(std::vector<Expr> value, SourcePos p) {
  Stmt s;
  s.kind = StmtKind::Return;
  s.exprs = std::move(value);
  s.pos = p;
  return s;
}

const MethodDecl* Program::find_method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.name == name) return &m;
  return nullptr;
}

int Program::method_index(const std::string& name) const {
  for (std::size_t i = 0; i < methods.size(); ++i)
    if (methods[i].name == name) return static_cast<int>(i);
  return -1;
}

const RecordDecl* Program::find_record(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return &r;
  return nullptr;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.operands.size() != b.operands.size()) return false;
  switch (a.kind) {
    case ExprKind::IntLit:
      if (a.int_value != b.int_value) return false;
      break;
    case ExprKind::FloatLit:
      // Bit identity: -0.0 and 0.0 print differently and must not compare equal.
      if (std::signbit(a.float_value) != std::signbit(b.float_value) || a.float_value != b.float_value)
        return false;
      break;
    case ExprKind::BoolLit:
      if (a.bool_value != b.bool_value) return false;
      break;
    case ExprKind::Var:
    case ExprKind::Field:
    case ExprKind::Call:
    case ExprKind::NewRecord:
      if (a.name != b.name) return false;
      break;
    case ExprKind::Unary:
      if (a.unary_op != b.unary_op) return false;
      break;
    case ExprKind::Binary:
      if (a.binary_op != b.binary_op) return false;
      break;
    case ExprKind::Cast:
    case ExprKind::NewArray:
      if (!(a.target == b.target)) return false;
      break;
    case ExprKind::NullLit:
    case ExprKind::Index:
      break;
  }
  for (std::size_t i = 0; i < a.operands.size(); ++i)
    if (!structurally_equal(a.operands[i], b.operands[i])) return false;
  return true;
}

bool structurally_equal(const std::vector<Stmt>& a, const std::vector<Stmt>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!structurally_equal(a[i], b[i])) return false;
  return true;
}

bool structurally_equal(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind || a.exprs.size() != b.exprs.size()) return false;
  for (std::size_t i = 0; i < a.exprs.size(); ++i)
    if (!structurally_equal(a.exprs[i], b.exprs[i])) return false;
  switch (a.kind) {
    case StmtKind::VarDecl:
      return a.decl_type == b.decl_type && a.name == b.name;
    case StmtKind::IncDec:
      return a.increment == b.increment;
    case StmtKind::If:
      return a.has_else == b.has_else && structurally_equal(a.body, b.body) &&
             structurally_equal(a.else_body, b.else_body);
    case StmtKind::For:
      return structurally_equal(a.init, b.init) && structurally_equal(a.update, b.update) &&
             structurally_equal(a.body, b.body);
    case StmtKind::While:
      return structurally_equal(a.body, b.body);
    case StmtKind::Switch:
      if (a.arms.size() != b.arms.size()) return false;
      for (std::size_t i = 0; i < a.arms.size(); ++i) {
        const auto& x = a.arms[i];
        const auto& y = b.arms[i];
        if (x.is_default != y.is_default || x.value != y.value || !structurally_equal(x.body, y.body))
          return false;
      }
      return true;
    default:
      return true;
  }
}

namespace {
bool same_params(const std::vector<Param>& a, const std::vector<Param>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i].type == b[i].type) || a[i].name != b[i].name) return false;
  return true;
}
}  // namespace

bool structurally_equal(const Program& a, const Program& b) {
  if (a.records.size() != b.records.size() || a.globals.size() != b.globals.size() ||
      a.methods.size() != b.methods.size())
    return false;
  for (std::size_t i = 0; i < a.records.size(); ++i)
    if (a.records[i].name != b.records[i].name || !same_params(a.records[i].fields, b.records[i].fields))
      return false;
  for (std::size_t i = 0; i < a.globals.size(); ++i)
    if (!(a.globals[i].type == b.globals[i].type) || a.globals[i].name != b.globals[i].name) return false;
  for (std::size_t i = 0; i < a.methods.size(); ++i) {
    const auto& x = a.methods[i];
    const auto& y = b.methods[i];
    if (x.name != y.name || !(x.return_type == y.return_type) || !same_params(x.params, y.params) ||
        !structurally_equal(x.body, y.body))
      return false;
  }
  return true;
}

}  // namespace enerlyze::lang
