#include "enerlyze/lang/checker.hpp"

#include <nlohmann/json.hpp>

#include "enerlyze/lang/library.hpp"

namespace enerlyze::lang {
namespace {

bool records_compatible(const Type& a, const Type& b) {
  return a.record.empty() || b.record.empty() || a.record == b.record;
}

bool assignable(const Type& dst, const Type& src) {
  if (dst.kind == src.kind) return dst.kind != TypeKind::Object || records_compatible(dst, src);
  if (dst.kind == TypeKind::Float && src.kind == TypeKind::Int) return true;
  return src.kind == TypeKind::Null && dst.is_reference();
}

std::string describe(const Type& t) { return "'" + spelling(t) + "'"; }

class Checker {
 public:
  Checker(Program& p, std::vector<const Stmt*>& stmts, std::vector<int>& stmt_method)
      : p_(p), stmts_(stmts), stmt_method_(stmt_method) {}

  void run() {
    for (const auto& r : p_.records)
      for (const auto& f : r.fields) check_type(f.type, f.pos);
    for (const auto& g : p_.globals) check_type(g.type, g.pos);
    for (std::size_t i = 0; i < p_.methods.size(); ++i) {
      if (find_library_function(p_.methods[i].name))
        throw TypeError("method '" + p_.methods[i].name + "' shadows a library function", p_.methods[i].pos);
    }
    for (std::size_t i = 0; i < p_.methods.size(); ++i) method(static_cast<int>(i));
  }

 private:
  struct Local {
    std::string name;
    Type type;
    int slot;
  };

  void check_type(const Type& t, SourcePos pos) const {
    if (t.kind == TypeKind::Object && !t.record.empty() && !p_.find_record(t.record))
      throw TypeError("unknown record '" + t.record + "'", pos);
  }

  void method(int index) {
    MethodDecl& m = p_.methods[static_cast<std::size_t>(index)];
    method_ = index;
    check_type(m.return_type, m.pos);
    if (m.name == "init" && (!m.params.empty() || m.return_type.kind != TypeKind::Void))
      throw TypeError("'init' must be 'void init()'", m.pos);
    if (m.name == "frame")
      for (const auto& prm : m.params)
        if (!prm.type.is_scalar()) throw TypeError("'frame' parameters must be int, float or bool", prm.pos);
    scopes_.assign(1, {});
    next_slot_ = 0;
    breakable_ = 0;
    for (const auto& prm : m.params) {
      check_type(prm.type, prm.pos);
      declare(prm.name, prm.type, prm.pos);
    }
    block(m.body, false);
    if (m.return_type.kind != TypeKind::Void &&
        (m.body.empty() || m.body.back().kind != StmtKind::Return))
      throw TypeError("method '" + m.name + "' must end with a return statement", m.pos);
    m.num_slots = next_slot_;
  }

  int declare(const std::string& name, const Type& t, SourcePos pos) {
    for (const auto& scope : scopes_)
      for (const auto& l : scope)
        if (l.name == name) throw TypeError("'" + name + "' is already declared", pos);
    scopes_.back().push_back({name, t, next_slot_});
    return next_slot_++;
  }

  void block(std::vector<Stmt>& body, bool new_scope = true) {
    if (new_scope) scopes_.emplace_back();
    for (std::size_t i = 0; i < body.size(); ++i) {
      const StmtKind k = body[i].kind;
      if ((k == StmtKind::Return || k == StmtKind::Break) && i + 1 != body.size())
        throw TypeError("unreachable statement", body[i + 1].pos);
      stmt(body[i]);
    }
    if (new_scope) scopes_.pop_back();
  }

  void register_stmt(Stmt& s) {
    s.id = static_cast<int>(stmts_.size());
    stmts_.push_back(&s);
    stmt_method_.push_back(method_);
  }

  void stmt(Stmt& s) {
    register_stmt(s);
    const MethodDecl& m = p_.methods[static_cast<std::size_t>(method_)];
    switch (s.kind) {
      case StmtKind::VarDecl: {
        check_type(s.decl_type, s.pos);
        if (!s.exprs.empty()) {
          const Type t = value(s.exprs[0]);
          if (!assignable(s.decl_type, t))
            throw TypeError("cannot initialize " + describe(s.decl_type) + " with " + describe(t), s.exprs[0].pos);
        }
        s.slot = declare(s.name, s.decl_type, s.pos);
        break;
      }
      case StmtKind::Assign: {
        const Type dst = lvalue(s.exprs[0]);
        const Type src = value(s.exprs[1]);
        if (!assignable(dst, src))
          throw TypeError("cannot assign " + describe(src) + " to " + describe(dst), s.exprs[1].pos);
        break;
      }
      case StmtKind::IncDec: {
        const Type t = lvalue(s.exprs[0]);
        if (t.kind != TypeKind::Int) throw TypeError("'++'/'--' needs an int target", s.pos);
        break;
      }
      case StmtKind::If:
        condition(s.exprs[0]);
        block(s.body);
        block(s.else_body);
        break;
      case StmtKind::For:
        scopes_.emplace_back();
        for (auto& x : s.init) stmt(x);
        condition(s.exprs[0]);
        for (auto& x : s.update) stmt(x);
        ++breakable_;
        block(s.body);
        --breakable_;
        scopes_.pop_back();
        break;
      case StmtKind::While:
        condition(s.exprs[0]);
        ++breakable_;
        block(s.body);
        --breakable_;
        break;
      case StmtKind::Switch: {
        const Type t = value(s.exprs[0]);
        if (t.kind != TypeKind::Int) throw TypeError("switch needs an int scrutinee", s.exprs[0].pos);
        ++breakable_;
        for (auto& arm : s.arms) block(arm.body);
        --breakable_;
        break;
      }
      case StmtKind::Call:
        if (s.exprs[0].kind != ExprKind::Call) throw TypeError("expression statement must be a call", s.pos);
        expr(s.exprs[0]);
        break;
      case StmtKind::Return:
        if (m.return_type.kind == TypeKind::Void) {
          if (!s.exprs.empty()) throw TypeError("void method returns a value", s.pos);
        } else {
          if (s.exprs.empty()) throw TypeError("missing return value", s.pos);
          const Type t = value(s.exprs[0]);
          if (!assignable(m.return_type, t))
            throw TypeError("cannot return " + describe(t) + " from " + describe(m.return_type) + " method",
                            s.exprs[0].pos);
        }
        break;
      case StmtKind::Break:
        if (breakable_ == 0) throw TypeError("'break' outside loop or switch", s.pos);
        break;
    }
  }

  void condition(Expr& e) {
    if (value(e).kind != TypeKind::Bool) throw TypeError("condition must be bool", e.pos);
  }

  Type lvalue(Expr& e) {
    if (e.kind != ExprKind::Var && e.kind != ExprKind::Field && e.kind != ExprKind::Index)
      throw TypeError("not assignable", e.pos);
    return value(e);
  }

  Type value(Expr& e) {
    const Type t = expr(e);
    if (t.kind == TypeKind::Void) throw TypeError("void value used", e.pos);
    return t;
  }

  const Local* lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      for (const auto& l : *it)
        if (l.name == name) return &l;
    return nullptr;
  }

  Type expr(Expr& e) {
    e.slot = e.global = e.field_index = e.method = e.library = -1;
    e.type = infer(e);
    return e.type;
  }

  Type infer(Expr& e) {
    using K = TypeKind;
    switch (e.kind) {
      case ExprKind::IntLit: return Type::of(K::Int);
      case ExprKind::FloatLit: return Type::of(K::Float);
      case ExprKind::BoolLit: return Type::of(K::Bool);
      case ExprKind::NullLit: return Type::of(K::Null);
      case ExprKind::Var: {
        if (const Local* l = lookup(e.name)) {
          e.slot = l->slot;
          return l->type;
        }
        for (std::size_t g = 0; g < p_.globals.size(); ++g) {
          if (p_.globals[g].name == e.name) {
            e.global = static_cast<int>(g);
            return p_.globals[g].type;
          }
        }
        throw TypeError("unresolved identifier '" + e.name + "'", e.pos);
      }
      case ExprKind::Field: {
        const Type obj = value(e.operands[0]);
        if (obj.kind != K::Object || obj.record.empty())
          throw TypeError("field access '." + e.name + "' needs a record-typed object, got " + describe(obj), e.pos);
        const RecordDecl* r = p_.find_record(obj.record);
        for (std::size_t f = 0; f < r->fields.size(); ++f) {
          if (r->fields[f].name == e.name) {
            e.field_index = static_cast<int>(f);
            return r->fields[f].type;
          }
        }
        throw TypeError("record '" + r->name + "' has no field '" + e.name + "'", e.pos);
      }
      case ExprKind::Index: {
        const Type arr = value(e.operands[0]);
        const Type idx = value(e.operands[1]);
        if (!arr.is_array()) throw TypeError("indexing a non-array " + describe(arr), e.pos);
        if (idx.kind != K::Int) throw TypeError("array index must be int", e.operands[1].pos);
        return Type::of(arr.kind == K::FloatArray ? K::Float : K::Int);
      }
      case ExprKind::Unary: {
        const Type x = value(e.operands[0]);
        if (e.unary_op == UnaryOp::Neg) {
          if (!x.is_numeric()) throw TypeError("'-' needs a numeric operand", e.pos);
          return x;
        }
        if (x.kind != K::Bool) throw TypeError("'!' needs a bool operand", e.pos);
        return x;
      }
      case ExprKind::Cast: {
        const Type x = value(e.operands[0]);
        if (!x.is_numeric() || x.kind == e.target.kind)
          throw TypeError("cannot cast " + describe(x) + " to " + describe(e.target), e.pos);
        return e.target;
      }
      case ExprKind::Binary: return binary(e);
      case ExprKind::Call: return call(e);
      case ExprKind::NewRecord:
        if (!p_.find_record(e.name)) throw TypeError("unknown record '" + e.name + "'", e.pos);
        e.target = Type::object(e.name);
        return e.target;
      case ExprKind::NewArray:
        if (value(e.operands[0]).kind != K::Int) throw TypeError("array length must be int", e.operands[0].pos);
        return e.target;
    }
    return {};
  }

  Type binary(Expr& e) {
    using K = TypeKind;
    const Type l = value(e.operands[0]);
    const Type r = value(e.operands[1]);
    const std::string what = std::string("operator '") + to_string(e.binary_op) + "' on " + describe(l) + " and " +
                             describe(r);
    switch (e.binary_op) {
      case BinaryOp::Add:
      case BinaryOp::Sub:
      case BinaryOp::Mul:
      case BinaryOp::Div:
        if (!l.is_numeric() || !r.is_numeric()) throw TypeError(what, e.pos);
        return Type::of(l.kind == K::Int && r.kind == K::Int ? K::Int : K::Float);
      case BinaryOp::Lt:
      case BinaryOp::Le:
      case BinaryOp::Gt:
      case BinaryOp::Ge:
        if (!l.is_numeric() || !r.is_numeric()) throw TypeError(what, e.pos);
        return Type::of(K::Bool);
      case BinaryOp::Eq:
      case BinaryOp::Ne: {
        bool ok = false;
        if (l.is_numeric() && r.is_numeric()) ok = true;
        if (l.kind == K::Bool && r.kind == K::Bool) ok = true;
        if (l.kind == K::Null && (r.is_reference() || r.kind == K::Null)) ok = true;
        if (r.kind == K::Null && l.is_reference()) ok = true;
        if (l.is_reference() && l.kind == r.kind && records_compatible(l, r)) ok = true;
        if (!ok) throw TypeError(what, e.pos);
        return Type::of(K::Bool);
      }
      case BinaryOp::And:
      case BinaryOp::Or:
        if (l.kind != K::Bool || r.kind != K::Bool) throw TypeError(what, e.pos);
        return Type::of(K::Bool);
      case BinaryOp::BitAnd:
      case BinaryOp::BitOr:
      case BinaryOp::Shl:
      case BinaryOp::Shr:
        if (l.kind != K::Int || r.kind != K::Int) throw TypeError(what, e.pos);
        return Type::of(K::Int);
    }
    return {};
  }

  Type call(Expr& e) {
    std::vector<Type> args;
    for (auto& a : e.operands) args.push_back(value(a));
    const int mi = p_.method_index(e.name);
    if (mi >= 0) {
      const MethodDecl& m = p_.methods[static_cast<std::size_t>(mi)];
      if (m.params.size() != args.size())
        throw TypeError("'" + e.name + "' expects " + std::to_string(m.params.size()) + " argument(s), got " +
                            std::to_string(args.size()),
                        e.pos);
      for (std::size_t i = 0; i < args.size(); ++i)
        if (!assignable(m.params[i].type, args[i]))
          throw TypeError("argument " + std::to_string(i + 1) + " of '" + e.name + "': cannot pass " +
                              describe(args[i]) + " as " + describe(m.params[i].type),
                          e.operands[i].pos);
      e.method = mi;
      return m.return_type;
    }
    const auto li = find_library_function(e.name);
    if (!li) throw TypeError("unresolved method '" + e.name + "'", e.pos);
    const LibraryFunction& f = library_function(*li);
    if (f.params.size() != args.size())
      throw TypeError("'" + e.name + "' expects " + std::to_string(f.params.size()) + " argument(s), got " +
                          std::to_string(args.size()),
                      e.pos);
    for (std::size_t i = 0; i < args.size(); ++i) {
      const LibraryParam& prm = f.params[i];
      bool ok = false;
      switch (prm.kind) {
        case LibraryParam::Kind::Exact: ok = assignable(prm.type, args[i]); break;
        case LibraryParam::Kind::AnyScalar: ok = args[i].is_scalar(); break;
        case LibraryParam::Kind::AnyArray: ok = args[i].is_array(); break;
      }
      if (!ok)
        throw TypeError("argument " + std::to_string(i + 1) + " of '" + e.name + "' has type " + describe(args[i]),
                        e.operands[i].pos);
    }
    e.library = *li;
    return f.result;
  }

  Program& p_;
  std::vector<const Stmt*>& stmts_;
  std::vector<int>& stmt_method_;
  std::vector<std::vector<Local>> scopes_;
  int next_slot_ = 0;
  int breakable_ = 0;
  int method_ = -1;
};

nlohmann::json span(SourcePos p) { return {{"line", p.line}, {"column", p.column}}; }

bool annotated(const Expr& e) { return e.type.kind != TypeKind::Void || e.method >= 0 || e.library >= 0; }

nlohmann::json expr_json(const Expr& e) {
  nlohmann::json j;
  j["kind"] = to_string(e.kind);
  j["span"] = span(e.pos);
  if (annotated(e)) j["type"] = spelling(e.type);
  switch (e.kind) {
    case ExprKind::IntLit: j["value"] = e.int_value; break;
    case ExprKind::FloatLit: j["value"] = e.float_value; break;
    case ExprKind::BoolLit: j["value"] = e.bool_value; break;
    case ExprKind::Var:
    case ExprKind::Field:
    case ExprKind::Call:
    case ExprKind::NewRecord: j["name"] = e.name; break;
    case ExprKind::Unary: j["op"] = to_string(e.unary_op); break;
    case ExprKind::Binary: j["op"] = to_string(e.binary_op); break;
    case ExprKind::Cast:
    case ExprKind::NewArray: j["target"] = spelling(e.target); break;
    default: break;
  }
  if (e.kind == ExprKind::Call && e.library >= 0) j["library"] = true;
  nlohmann::json children = nlohmann::json::array();
  for (const auto& c : e.operands) children.push_back(expr_json(c));
  j["children"] = std::move(children);
  return j;
}

nlohmann::json stmts_json(const std::vector<Stmt>& body);

nlohmann::json stmt_json(const Stmt& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.kind);
  j["span"] = span(s.pos);
  if (s.id >= 0) j["id"] = s.id;
  switch (s.kind) {
    case StmtKind::VarDecl:
      j["name"] = s.name;
      j["declared_type"] = spelling(s.decl_type);
      break;
    case StmtKind::IncDec: j["op"] = s.increment ? "++" : "--"; break;
    case StmtKind::If:
      j["then"] = stmts_json(s.body);
      if (s.has_else) j["else"] = stmts_json(s.else_body);
      break;
    case StmtKind::For:
      j["init"] = stmts_json(s.init);
      j["update"] = stmts_json(s.update);
      j["body"] = stmts_json(s.body);
      break;
    case StmtKind::While: j["body"] = stmts_json(s.body); break;
    case StmtKind::Switch: {
      nlohmann::json arms = nlohmann::json::array();
      for (const auto& a : s.arms) {
        nlohmann::json arm = {{"span", span(a.pos)}, {"body", stmts_json(a.body)}};
        if (a.is_default) {
          arm["default"] = true;
        } else {
          arm["value"] = a.value;
        }
        arms.push_back(std::move(arm));
      }
      j["arms"] = std::move(arms);
      break;
    }
    default: break;
  }
  nlohmann::json children = nlohmann::json::array();
  for (const auto& e : s.exprs) children.push_back(expr_json(e));
  j["children"] = std::move(children);
  return j;
}

nlohmann::json stmts_json(const std::vector<Stmt>& body) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& s : body) a.push_back(stmt_json(s));
  return a;
}

nlohmann::json params_json(const std::vector<Param>& ps) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : ps) a.push_back({{"name", p.name}, {"type", spelling(p.type)}, {"span", span(p.pos)}});
  return a;
}

}  // namespace

int CheckedProgram::record_index(const std::string& name) const {
  const auto& rs = d_->program.records;
  for (std::size_t i = 0; i < rs.size(); ++i)
    if (rs[i].name == name) return static_cast<int>(i);
  return -1;
}

CheckedProgram check(Program program) {
  auto d = std::make_shared<CheckedProgram::Data>();
  d->program = std::move(program);
  Checker(d->program, d->stmts, d->stmt_method).run();
  CheckedProgram out;
  out.d_ = std::move(d);
  return out;
}

nlohmann::json ast_to_json(const Program& program) {
  nlohmann::json j;
  j["kind"] = "Program";
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : program.records)
    records.push_back({{"kind", "Record"}, {"name", r.name}, {"span", span(r.pos)}, {"fields", params_json(r.fields)}});
  nlohmann::json globals = nlohmann::json::array();
  for (const auto& g : program.globals)
    globals.push_back({{"kind", "Global"}, {"name", g.name}, {"type", spelling(g.type)}, {"span", span(g.pos)}});
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : program.methods)
    methods.push_back({{"kind", "Method"},
                       {"name", m.name},
                       {"return_type", spelling(m.return_type)},
                       {"span", span(m.pos)},
                       {"params", params_json(m.params)},
                       {"children", stmts_json(m.body)}});
  j["records"] = std::move(records);
  j["globals"] = std::move(globals);
  j["children"] = std::move(methods);
  return j;
}

}  // namespace enerlyze::lang
