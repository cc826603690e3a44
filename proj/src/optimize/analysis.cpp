#include "analysis.hpp"

#include <algorithm>

#include "enerlyze/blocks.hpp"
#include "enerlyze/lang/library.hpp"
#include "enerlyze/lang/parser.hpp"

namespace enerlyze::opt {

using lang::ExprKind;
using lang::StmtKind;

void for_each_expr(const Expr& e, const std::function<void(const Expr&)>& f) {
  f(e);
  for (const auto& o : e.operands) for_each_expr(o, f);
}

void for_each_expr(const Stmt& s, const std::function<void(const Expr&)>& f) {
  for (const auto& e : s.exprs) for_each_expr(e, f);
  for (const auto& x : s.init) for_each_expr(x, f);
  for (const auto& x : s.update) for_each_expr(x, f);
  for (const auto& x : s.body) for_each_expr(x, f);
  for (const auto& x : s.else_body) for_each_expr(x, f);
  for (const auto& arm : s.arms)
    for (const auto& x : arm.body) for_each_expr(x, f);
}

void for_each_expr_mut(Expr& e, const std::function<void(Expr&)>& f) {
  f(e);
  for (auto& o : e.operands) for_each_expr_mut(o, f);
}

void for_each_expr_mut(Stmt& s, const std::function<void(Expr&)>& f) {
  for (auto& e : s.exprs) for_each_expr_mut(e, f);
  for (auto& x : s.init) for_each_expr_mut(x, f);
  for (auto& x : s.update) for_each_expr_mut(x, f);
  for (auto& x : s.body) for_each_expr_mut(x, f);
  for (auto& x : s.else_body) for_each_expr_mut(x, f);
  for (auto& arm : s.arms)
    for (auto& x : arm.body) for_each_expr_mut(x, f);
}

void for_each_stmt(const std::vector<Stmt>& list, const std::function<void(const Stmt&)>& f) {
  for (const auto& s : list) {
    f(s);
    for_each_stmt(s.init, f);
    for_each_stmt(s.update, f);
    for_each_stmt(s.body, f);
    for_each_stmt(s.else_body, f);
    for (const auto& arm : s.arms) for_each_stmt(arm.body, f);
  }
}

void for_each_stmt_mut(std::vector<Stmt>& list, const std::function<void(Stmt&)>& f) {
  for (auto& s : list) {
    f(s);
    for_each_stmt_mut(s.init, f);
    for_each_stmt_mut(s.update, f);
    for_each_stmt_mut(s.body, f);
    for_each_stmt_mut(s.else_body, f);
    for (auto& arm : s.arms) for_each_stmt_mut(arm.body, f);
  }
}

int count_statements(const std::vector<Stmt>& list) {
  int n = 0;
  for_each_stmt(list, [&](const Stmt&) { ++n; });
  return n;
}

namespace {

std::optional<StmtRef> find_in(std::vector<Stmt>& list, int id) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    Stmt& s = list[i];
    if (s.id == id) return StmtRef{&list, i};
    for (auto* sub : {&s.init, &s.update, &s.body, &s.else_body})
      if (auto r = find_in(*sub, id)) return r;
    for (auto& arm : s.arms)
      if (auto r = find_in(arm.body, id)) return r;
  }
  return std::nullopt;
}

}  // namespace

std::optional<StmtRef> find_stmt(Program& p, int id) {
  for (auto& m : p.methods)
    if (auto r = find_in(m.body, id)) return r;
  return std::nullopt;
}

std::optional<int> loop_stmt_for_block(const lang::CheckedProgram& cp, const std::string& block_id) {
  const BlockMap bm = divide_blocks(cp);
  const auto b = bm.find(block_id);
  if (!b) return std::nullopt;
  for (int s = 0; s < cp.stmt_count(); ++s) {
    const auto k = cp.stmt(s).kind;
    if ((k == StmtKind::For || k == StmtKind::While) && bm.body_block[static_cast<std::size_t>(s)] == *b) return s;
  }
  return std::nullopt;
}

void Effects::merge(const Effects& o) {
  locals.insert(o.locals.begin(), o.locals.end());
  globals.insert(o.globals.begin(), o.globals.end());
  fields.insert(o.fields.begin(), o.fields.end());
  arrays = arrays || o.arrays;
  state |= o.state;
  output = output || o.output;
  alloc = alloc || o.alloc;
}

bool Effects::empty() const {
  return locals.empty() && globals.empty() && fields.empty() && !arrays && state == 0 && !output && !alloc;
}

bool Effects::intersects(const Effects& r) const {
  auto meet = [](const auto& a, const auto& b) {
    return std::any_of(a.begin(), a.end(), [&](const auto& x) { return b.count(x) > 0; });
  };
  return meet(locals, r.locals) || meet(globals, r.globals) || meet(fields, r.fields) || (arrays && r.arrays) ||
         (state & r.state) != 0 || (output && r.output);
}

EffectAnalysis::EffectAnalysis(const Program& p) : p_(p) {
  const std::size_t n = p.methods.size();
  summaries_.assign(n, {});
  reach_.assign(n, {});
  // Direct callees, then transitive closure.
  for (std::size_t m = 0; m < n; ++m)
    for (const auto& s : p.methods[m].body)
      for_each_expr(s, [&](const Expr& e) {
        if (e.kind == ExprKind::Call && e.method >= 0) reach_[m].insert(e.method);
      });
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t m = 0; m < n; ++m) {
      const auto before = reach_[m].size();
      for (int c : std::set<int>(reach_[m])) reach_[m].insert(reach_[static_cast<std::size_t>(c)].begin(), reach_[static_cast<std::size_t>(c)].end());
      changed = changed || reach_[m].size() != before;
    }
  }
  // Summaries grow monotonically to a fixpoint.
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t m = 0; m < n; ++m) {
      EffectPair e = stmts(p.methods[m].body);
      e.reads.locals.clear();
      e.writes.locals.clear();
      auto size = [](const EffectPair& x) {
        return x.reads.globals.size() + x.reads.fields.size() + x.writes.globals.size() + x.writes.fields.size() +
               (x.reads.arrays ? 1 : 0) + (x.writes.arrays ? 1 : 0) + static_cast<std::size_t>(x.reads.state) * 7 +
               static_cast<std::size_t>(x.writes.state) * 11 + (x.writes.output ? 1 : 0) + (x.writes.alloc ? 1 : 0);
      };
      const auto before = size(summaries_[m]);
      summaries_[m].merge(e);
      changed = changed || size(summaries_[m]) != before;
    }
  }
}

bool EffectAnalysis::recursive(int index) const { return reach_[static_cast<std::size_t>(index)].count(index) > 0; }

void EffectAnalysis::add_expr(const Expr& e, EffectPair& out) const {
  switch (e.kind) {
    case ExprKind::Var:
      if (e.slot >= 0) out.reads.locals.insert(e.slot);
      if (e.global >= 0) out.reads.globals.insert(e.global);
      break;
    case ExprKind::Field: out.reads.fields.insert(e.name); break;
    case ExprKind::Index: out.reads.arrays = true; break;
    case ExprKind::Call:
      if (e.method >= 0) {
        out.merge(summaries_[static_cast<std::size_t>(e.method)]);
      } else if (e.library >= 0) {
        const auto& fn = lang::library_function(e.library);
        if (fn.name != "buffer_limit" && fn.name != "array_length")
          out.reads.state |= fn.reads & ~(lang::kStateOutput | lang::kStateHeap);
        out.writes.state |= fn.writes & ~(lang::kStateOutput | lang::kStateHeap);
        if (fn.writes & lang::kStateOutput) out.writes.output = true;
        if (fn.writes & lang::kStateHeap) out.writes.alloc = true;
      }
      break;
    case ExprKind::NewRecord:
    case ExprKind::NewArray: out.writes.alloc = true; break;
    default: break;
  }
  for (const auto& o : e.operands) add_expr(o, out);
}

void EffectAnalysis::add_stmt(const Stmt& s, EffectPair& out) const {
  auto target = [&](const Expr& t) {
    switch (t.kind) {
      case ExprKind::Var:
        if (t.slot >= 0) out.writes.locals.insert(t.slot);
        if (t.global >= 0) out.writes.globals.insert(t.global);
        break;
      case ExprKind::Field:
        out.writes.fields.insert(t.name);
        add_expr(t.operands[0], out);
        break;
      case ExprKind::Index:
        out.writes.arrays = true;
        add_expr(t.operands[0], out);
        add_expr(t.operands[1], out);
        break;
      default: add_expr(t, out);
    }
  };
  switch (s.kind) {
    case StmtKind::VarDecl:
      if (s.slot >= 0) out.writes.locals.insert(s.slot);
      for (const auto& e : s.exprs) add_expr(e, out);
      break;
    case StmtKind::Assign:
      target(s.exprs[0]);
      add_expr(s.exprs[1], out);
      break;
    case StmtKind::IncDec:
      target(s.exprs[0]);
      add_expr(s.exprs[0], out);
      break;
    default:
      for (const auto& e : s.exprs) add_expr(e, out);
  }
  for (const auto* list : {&s.init, &s.update, &s.body, &s.else_body})
    for (const auto& x : *list) add_stmt(x, out);
  for (const auto& arm : s.arms)
    for (const auto& x : arm.body) add_stmt(x, out);
}

EffectPair EffectAnalysis::expr(const Expr& e) const {
  EffectPair out;
  add_expr(e, out);
  return out;
}

EffectPair EffectAnalysis::stmt(const Stmt& s) const {
  EffectPair out;
  add_stmt(s, out);
  return out;
}

EffectPair EffectAnalysis::stmts(const std::vector<Stmt>& list) const {
  EffectPair out;
  for (const auto& s : list) add_stmt(s, out);
  return out;
}

bool EffectAnalysis::pure(const Expr& e) const { return expr(e).writes.empty(); }

bool calls_user_method(const Expr& e) {
  bool found = false;
  for_each_expr(e, [&](const Expr& x) { found = found || (x.kind == ExprKind::Call && x.method >= 0); });
  return found;
}

int op_node_count(const Expr& e) {
  int n = 0;
  for_each_expr(e, [&](const Expr& x) { n += ops::of_expr(x) >= 0 ? 1 : 0; });
  return n;
}

double expr_cost(const Expr& e, const std::vector<double>& cost_uJ) {
  double c = 0.0;
  for_each_expr(e, [&](const Expr& x) {
    const int op = ops::of_expr(x);
    if (op >= 0) c += cost_uJ.at(static_cast<std::size_t>(op));
  });
  return c;
}

namespace {

// Constant allocation size over every assignment of a global.
std::optional<std::int64_t> allocation_size(const Program& p, int global, const char* library_fn) {
  std::optional<std::int64_t> size;
  bool ok = true;
  for (const auto& m : p.methods)
    for_each_stmt(m.body, [&](const Stmt& s) {
      if (!ok) return;
      if ((s.kind == StmtKind::Assign || s.kind == StmtKind::IncDec) && s.exprs[0].kind == ExprKind::Var &&
          s.exprs[0].global == global) {
        if (s.kind == StmtKind::IncDec) {
          ok = false;
          return;
        }
        const Expr& v = s.exprs[1];
        std::optional<std::int64_t> n;
        if (library_fn && v.kind == ExprKind::Call && v.library >= 0 &&
            lang::library_function(v.library).name == library_fn && v.operands[0].kind == ExprKind::IntLit)
          n = v.operands[0].int_value;
        if (!library_fn && v.kind == ExprKind::NewArray && v.operands[0].kind == ExprKind::IntLit)
          n = v.operands[0].int_value;
        if (!n || (size && *size != *n)) {
          ok = false;
          return;
        }
        size = n;
      }
    });
  if (!ok) return std::nullopt;
  return size;
}

}  // namespace

bool local_written(const MethodDecl& method, int slot) {
  bool written = false;
  for_each_stmt(method.body, [&](const Stmt& s) {
    if ((s.kind == StmtKind::Assign || s.kind == StmtKind::IncDec) && s.exprs[0].kind == ExprKind::Var &&
        s.exprs[0].slot == slot)
      written = true;
  });
  return written;
}

std::optional<std::int64_t> const_int(const Program& p, const MethodDecl& method, const Expr& e) {
  switch (e.kind) {
    case ExprKind::IntLit: return e.int_value;
    case ExprKind::Binary: {
      if (e.type.kind != lang::TypeKind::Int) return std::nullopt;
      const auto l = const_int(p, method, e.operands[0]);
      const auto r = const_int(p, method, e.operands[1]);
      if (!l || !r) return std::nullopt;
      std::int64_t v = 0;
      switch (e.binary_op) {
        case lang::BinaryOp::Add:
          if (__builtin_add_overflow(*l, *r, &v)) return std::nullopt;
          return v;
        case lang::BinaryOp::Sub:
          if (__builtin_sub_overflow(*l, *r, &v)) return std::nullopt;
          return v;
        case lang::BinaryOp::Mul:
          if (__builtin_mul_overflow(*l, *r, &v)) return std::nullopt;
          return v;
        case lang::BinaryOp::Div:
          if (*r == 0 || *r == -1) return std::nullopt;
          return *l / *r;
        default: return std::nullopt;
      }
    }
    case ExprKind::Var: {
      if (e.slot < 0 || local_written(method, e.slot)) return std::nullopt;
      // Parameters are not constant.
      std::optional<std::int64_t> v;
      for_each_stmt(method.body, [&](const Stmt& s) {
        if (s.kind == StmtKind::VarDecl && s.slot == e.slot && !s.exprs.empty() &&
            s.decl_type.kind == lang::TypeKind::Int)
          v = const_int(p, method, s.exprs[0]);
      });
      return v;
    }
    case ExprKind::Call: {
      if (e.library < 0 || e.operands.size() != 1 || e.operands[0].kind != ExprKind::Var || e.operands[0].global < 0)
        return std::nullopt;
      const auto& name = lang::library_function(e.library).name;
      if (name == "buffer_limit") return allocation_size(p, e.operands[0].global, "buffer_new");
      if (name == "array_length") return allocation_size(p, e.operands[0].global, nullptr);
      return std::nullopt;
    }
    default: return std::nullopt;
  }
}

bool unique_buffer_global(const Program& p, int global) {
  bool any = false;
  bool ok = true;
  for (const auto& m : p.methods)
    for_each_stmt(m.body, [&](const Stmt& s) {
      if ((s.kind == StmtKind::Assign || s.kind == StmtKind::IncDec) && s.exprs[0].kind == ExprKind::Var &&
          s.exprs[0].global == global) {
        const Expr& v = s.exprs.back();
        if (s.kind == StmtKind::Assign && v.kind == ExprKind::Call && v.library >= 0 &&
            lang::library_function(v.library).name == "buffer_new")
          any = true;
        else
          ok = false;
      }
    });
  return ok && any;
}

std::set<std::string> used_names(const Program& p) {
  std::set<std::string> names;
  for (const auto& r : p.records) {
    names.insert(r.name);
    for (const auto& f : r.fields) names.insert(f.name);
  }
  for (const auto& g : p.globals) names.insert(g.name);
  for (const auto& m : p.methods) {
    names.insert(m.name);
    for (const auto& prm : m.params) names.insert(prm.name);
    for_each_stmt(m.body, [&](const Stmt& s) {
      if (s.kind == StmtKind::VarDecl) names.insert(s.name);
      for_each_expr(s, [&](const Expr& e) {
        if (e.kind == ExprKind::Var) names.insert(e.name);
      });
    });
  }
  for (const auto& f : lang::library_functions()) names.insert(f.name);
  return names;
}

std::string fresh_name(const std::string& base, std::set<std::string>& used) {
  std::string name = base;
  for (int k = 2; used.count(name); ++k) name = base + "_" + std::to_string(k);
  used.insert(name);
  return name;
}

std::set<std::string> declared_names(const std::vector<Stmt>& list) {
  std::set<std::string> names;
  for_each_stmt(list, [&](const Stmt& s) {
    if (s.kind == StmtKind::VarDecl) names.insert(s.name);
  });
  return names;
}

lang::CheckedProgram recheck(const Program& p) {
  const std::string text = lang::pretty_print(p);
  try {
    return lang::check(lang::parse_source(text));
  } catch (const Error& e) {
    throw Error("internal", std::string("refactoring produced an invalid program: ") + e.what());
  }
}

}  // namespace enerlyze::opt
