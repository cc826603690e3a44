#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <variant>

#include "analysis.hpp"
#include "enerlyze/blocks.hpp"
#include "enerlyze/lang/library.hpp"
#include "enerlyze/lang/parser.hpp"
#include "enerlyze/optimize.hpp"

namespace enerlyze {

using namespace opt;
using lang::BinaryOp;
using lang::ExprKind;
using lang::StmtKind;
using lang::Type;
using lang::TypeKind;

lang::CheckedProgram recheck(const lang::Program& p) { return opt::recheck(p); }

namespace {

Refactoring refuse(std::string reason) {
  Refactoring r;
  r.reason = std::move(reason);
  return r;
}

Refactoring done(Program p, std::string description) {
  Refactoring r;
  r.applied = true;
  r.description = std::move(description);
  r.program = std::move(p);
  return r;
}

bool is_literal(const Expr& e) {
  return e.kind == ExprKind::IntLit || e.kind == ExprKind::FloatLit || e.kind == ExprKind::BoolLit ||
         e.kind == ExprKind::NullLit;
}

bool is_simple(const Expr& e) { return is_literal(e) || e.kind == ExprKind::Var; }

bool storable(const Type& t) { return t.is_scalar() || t.is_reference(); }

std::string hint_name(const Expr& e) {
  if (e.kind == ExprKind::Call && e.library >= 0) {
    const auto& n = lang::library_function(e.library).name;
    return n.substr(n.rfind('_') + 1);
  }
  if (e.kind == ExprKind::Call) return e.name + "_value";
  if (e.kind == ExprKind::Field) return e.name;
  return "inv";
}

// -- if combination ---------------------------------------------------------

bool ends_in_jump(const std::vector<Stmt>& body) {
  return !body.empty() && (body.back().kind == StmtKind::Return || body.back().kind == StmtKind::Break);
}

std::set<std::string> top_level_decls(const std::vector<Stmt>& list) {
  std::set<std::string> names;
  for (const auto& s : list)
    if (s.kind == StmtKind::VarDecl) names.insert(s.name);
  return names;
}

bool merge_once(std::vector<Stmt>& list, const EffectAnalysis& fx, int& merged) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Stmt& first = list[i];
    if (first.kind != StmtKind::If || first.has_else || !fx.pure(first.exprs[0]) || ends_in_jump(first.body)) continue;
    const Expr& cond = first.exprs[0];
    const Effects reads = fx.expr(cond).reads;
    Effects written = fx.stmts(first.body).writes;
    for (std::size_t k = i + 1; k < list.size(); ++k) {
      const Stmt& s = list[k];
      if (s.kind == StmtKind::If && !s.has_else && lang::structurally_equal(s.exprs[0], cond)) {
        if (written.intersects(reads)) break;
        std::vector<Stmt> later(list.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                                list.begin() + static_cast<std::ptrdiff_t>(k));
        const std::vector<Stmt> inter = later;
        later.insert(later.end(), s.body.begin(), s.body.end());
        const auto clash = declared_names(later);
        bool ok = true;
        for (const auto& n : top_level_decls(first.body)) ok = ok && !clash.count(n);
        if (!ok) break;
        Stmt combined = first;
        combined.body.insert(combined.body.end(), inter.begin(), inter.end());
        combined.body.insert(combined.body.end(), s.body.begin(), s.body.end());
        combined.else_body = inter;
        combined.has_else = !inter.empty();
        list.erase(list.begin() + static_cast<std::ptrdiff_t>(i) + 1, list.begin() + static_cast<std::ptrdiff_t>(k) + 1);
        list[i] = std::move(combined);
        ++merged;
        return true;
      }
      if (s.kind == StmtKind::VarDecl || s.kind == StmtKind::Return || s.kind == StmtKind::Break) break;
      written.merge(fx.stmt(s).writes);
    }
  }
  for (auto& s : list) {
    for (auto* sub : {&s.body, &s.else_body})
      if (merge_once(*sub, fx, merged)) return true;
    for (auto& arm : s.arms)
      if (merge_once(arm.body, fx, merged)) return true;
  }
  return false;
}

// -- loops ------------------------------------------------------------------

struct CountedLoop {
  int ivar = -1;
  std::string name;
  std::int64_t start = 0;
  std::int64_t stride = 0;
  const Expr* bound = nullptr;
};

std::optional<std::int64_t> stride_of(const Stmt& u, int ivar) {
  if (u.kind == StmtKind::IncDec && u.increment && u.exprs[0].kind == ExprKind::Var && u.exprs[0].slot == ivar)
    return 1;
  if (u.kind != StmtKind::Assign || u.exprs[0].kind != ExprKind::Var || u.exprs[0].slot != ivar) return std::nullopt;
  const Expr& v = u.exprs[1];
  if (v.kind != ExprKind::Binary || v.binary_op != BinaryOp::Add) return std::nullopt;
  const Expr& a = v.operands[0];
  const Expr& b = v.operands[1];
  if (a.kind == ExprKind::Var && a.slot == ivar && b.kind == ExprKind::IntLit && b.int_value > 0) return b.int_value;
  if (b.kind == ExprKind::Var && b.slot == ivar && a.kind == ExprKind::IntLit && a.int_value > 0) return a.int_value;
  return std::nullopt;
}

std::variant<CountedLoop, std::string> counted_loop(const Program& p, const MethodDecl& m, const Stmt& loop) {
  if (loop.kind != StmtKind::For) return std::string("not a for loop");
  if (loop.init.size() != 1 || loop.init[0].kind != StmtKind::VarDecl || loop.init[0].decl_type.kind != TypeKind::Int ||
      loop.init[0].exprs.empty())
    return std::string("loop does not declare an int index");
  CountedLoop c;
  c.ivar = loop.init[0].slot;
  c.name = loop.init[0].name;
  const auto start = const_int(p, m, loop.init[0].exprs[0]);
  if (!start) return std::string("loop start is not constant");
  c.start = *start;
  const Expr& cond = loop.exprs[0];
  if (cond.kind != ExprKind::Binary || cond.binary_op != BinaryOp::Lt || cond.operands[0].kind != ExprKind::Var ||
      cond.operands[0].slot != c.ivar)
    return std::string("condition is not 'index < bound'");
  c.bound = &cond.operands[1];
  if (loop.update.size() != 1) return std::string("loop has no update");
  const auto stride = stride_of(loop.update[0], c.ivar);
  if (!stride) return std::string("update is not a constant positive step of the index");
  c.stride = *stride;
  bool writes_index = false;
  for_each_stmt(loop.body, [&](const Stmt& s) {
    if ((s.kind == StmtKind::Assign || s.kind == StmtKind::IncDec) && s.exprs[0].kind == ExprKind::Var &&
        s.exprs[0].slot == c.ivar)
      writes_index = true;
  });
  if (writes_index) return std::string("body assigns the loop index");
  return c;
}

bool has_own_break(const std::vector<Stmt>& list) {
  for (const auto& s : list) {
    if (s.kind == StmtKind::Break) return true;
    if (s.kind == StmtKind::For || s.kind == StmtKind::While) continue;
    if (has_own_break(s.body) || has_own_break(s.else_body)) return true;
    for (const auto& arm : s.arms)
      if (has_own_break(arm.body)) return true;
  }
  return false;
}

// Folds (i + a) + b into i + (a + b) for the loop index.
void merge_offsets(Expr& e, const std::string& index) {
  for (auto& o : e.operands) merge_offsets(o, index);
  if (e.kind == ExprKind::Binary && e.binary_op == BinaryOp::Add && e.operands[1].kind == ExprKind::IntLit) {
    Expr& inner = e.operands[0];
    if (inner.kind == ExprKind::Binary && inner.binary_op == BinaryOp::Add && inner.operands[0].kind == ExprKind::Var &&
        inner.operands[0].name == index && inner.operands[1].kind == ExprKind::IntLit) {
      const std::int64_t sum = inner.operands[1].int_value + e.operands[1].int_value;
      Expr var = inner.operands[0];
      e = Expr::binary(BinaryOp::Add, std::move(var), Expr::int_lit(sum));
    }
  }
}

struct LoopSite {
  Program program;
  StmtRef ref;
  int method = -1;
};

std::variant<LoopSite, std::string> locate_loop(const lang::CheckedProgram& cp, const std::string& loop_block) {
  const auto sid = loop_stmt_for_block(cp, loop_block);
  if (!sid) return "no loop has body block '" + loop_block + "'";
  LoopSite site{cp.program(), {}, cp.stmt_method(*sid)};
  const auto ref = find_stmt(site.program, *sid);
  if (!ref) throw Error("internal", "loop statement not found");
  site.ref = *ref;
  return site;
}

// -- folding ----------------------------------------------------------------

std::optional<Expr> fold_binary(const Expr& e) {
  const Expr& l = e.operands[0];
  const Expr& r = e.operands[1];
  const bool li = l.kind == ExprKind::IntLit, ri = r.kind == ExprKind::IntLit;
  const bool lf = l.kind == ExprKind::FloatLit, rf = r.kind == ExprKind::FloatLit;
  const bool lb = l.kind == ExprKind::BoolLit, rb = r.kind == ExprKind::BoolLit;
  if (li && ri) {
    const std::int64_t a = l.int_value, b = r.int_value;
    std::int64_t v = 0;
    switch (e.binary_op) {
      case BinaryOp::Add:
        if (__builtin_add_overflow(a, b, &v)) return std::nullopt;
        break;
      case BinaryOp::Sub:
        if (__builtin_sub_overflow(a, b, &v)) return std::nullopt;
        break;
      case BinaryOp::Mul:
        if (__builtin_mul_overflow(a, b, &v)) return std::nullopt;
        break;
      case BinaryOp::Div:
        if (b == 0 || b == -1) return std::nullopt;
        v = a / b;
        break;
      case BinaryOp::BitAnd: v = a & b; break;
      case BinaryOp::BitOr: v = a | b; break;
      case BinaryOp::Lt: return Expr::bool_lit(a < b);
      case BinaryOp::Le: return Expr::bool_lit(a <= b);
      case BinaryOp::Gt: return Expr::bool_lit(a > b);
      case BinaryOp::Ge: return Expr::bool_lit(a >= b);
      case BinaryOp::Eq: return Expr::bool_lit(a == b);
      case BinaryOp::Ne: return Expr::bool_lit(a != b);
      default: return std::nullopt;
    }
    // A negative literal would print as a negation.
    if (v < 0) return std::nullopt;
    return Expr::int_lit(v);
  }
  if ((li || lf) && (ri || rf)) {
    const double a = li ? static_cast<double>(l.int_value) : l.float_value;
    const double b = ri ? static_cast<double>(r.int_value) : r.float_value;
    double v = 0.0;
    switch (e.binary_op) {
      case BinaryOp::Add: v = a + b; break;
      case BinaryOp::Sub: v = a - b; break;
      case BinaryOp::Mul: v = a * b; break;
      case BinaryOp::Div: v = a / b; break;
      case BinaryOp::Lt: return Expr::bool_lit(a < b);
      case BinaryOp::Le: return Expr::bool_lit(a <= b);
      case BinaryOp::Gt: return Expr::bool_lit(a > b);
      case BinaryOp::Ge: return Expr::bool_lit(a >= b);
      case BinaryOp::Eq: return Expr::bool_lit(a == b);
      case BinaryOp::Ne: return Expr::bool_lit(a != b);
      default: return std::nullopt;
    }
    if (!std::isfinite(v) || v < 0.0 || std::signbit(v)) return std::nullopt;
    return Expr::float_lit(v);
  }
  if (lb && rb) {
    const bool a = l.bool_value, b = r.bool_value;
    switch (e.binary_op) {
      case BinaryOp::And: return Expr::bool_lit(a && b);
      case BinaryOp::Or: return Expr::bool_lit(a || b);
      case BinaryOp::Eq: return Expr::bool_lit(a == b);
      case BinaryOp::Ne: return Expr::bool_lit(a != b);
      default: return std::nullopt;
    }
  }
  return std::nullopt;
}

bool fold(Expr& e) {
  bool changed = false;
  for (auto& o : e.operands) changed = fold(o) || changed;
  std::optional<Expr> lit;
  if (e.kind == ExprKind::Binary) {
    lit = fold_binary(e);
  } else if (e.kind == ExprKind::Unary && e.unary_op == lang::UnaryOp::Not && e.operands[0].kind == ExprKind::BoolLit) {
    lit = Expr::bool_lit(!e.operands[0].bool_value);
  } else if (e.kind == ExprKind::Cast && e.target.kind == TypeKind::Float && e.operands[0].kind == ExprKind::IntLit) {
    lit = Expr::float_lit(static_cast<double>(e.operands[0].int_value));
  } else if (e.kind == ExprKind::Cast && e.target.kind == TypeKind::Int && e.operands[0].kind == ExprKind::FloatLit &&
             std::isfinite(e.operands[0].float_value) && e.operands[0].float_value >= 0.0 &&
             e.operands[0].float_value < 9.0e18) {
    lit = Expr::int_lit(static_cast<std::int64_t>(e.operands[0].float_value));
  }
  if (!lit) return changed;
  lit->pos = e.pos;
  e = std::move(*lit);
  return true;
}

std::optional<Expr> literal_for(const Type& t, const Expr& init) {
  if (t.kind == TypeKind::Int && init.kind == ExprKind::IntLit) return init;
  if (t.kind == TypeKind::Float && init.kind == ExprKind::FloatLit) return init;
  if (t.kind == TypeKind::Float && init.kind == ExprKind::IntLit)
    return Expr::float_lit(static_cast<double>(init.int_value));
  if (t.kind == TypeKind::Bool && init.kind == ExprKind::BoolLit) return init;
  return std::nullopt;
}

// -- CSE --------------------------------------------------------------------

// Root expressions a statement evaluates itself, excluding nested bodies and
// loop headers (which run more than once).
std::vector<Expr*> eval_roots(Stmt& s) {
  std::vector<Expr*> roots;
  switch (s.kind) {
    case StmtKind::Assign:
    case StmtKind::IncDec: {
      Expr& t = s.exprs[0];
      if (t.kind != ExprKind::Var)
        for (auto& o : t.operands) roots.push_back(&o);
      if (s.kind == StmtKind::Assign) roots.push_back(&s.exprs[1]);
      break;
    }
    case StmtKind::For:
    case StmtKind::While: break;
    default:
      for (auto& e : s.exprs) roots.push_back(&e);
  }
  return roots;
}

int count_matches(const Expr& x, const Expr& e) {
  if (lang::structurally_equal(x, e)) return 1;
  int n = 0;
  for (const auto& o : x.operands) n += count_matches(o, e);
  return n;
}

void replace_matches(Expr& x, const Expr& e, const std::string& name) {
  if (lang::structurally_equal(x, e)) {
    x = Expr::var(name, x.pos);
    return;
  }
  for (auto& o : x.operands) replace_matches(o, e, name);
}

struct CseChoice {
  std::vector<Stmt>* list = nullptr;
  std::size_t first = 0;
  std::size_t last = 0;
  Expr expr;
  double saving = 0.0;
};

void cse_scan(std::vector<Stmt>& list, const EffectAnalysis& fx, const std::vector<double>& cost, CseChoice& best) {
  for (std::size_t j = 0; j < list.size(); ++j) {
    std::vector<const Expr*> cands;
    for (Expr* root : eval_roots(list[j]))
      for_each_expr(*root, [&](const Expr& x) {
        if (is_simple(x) || !storable(x.type) || calls_user_method(x) || !fx.pure(x)) return;
        if (expr_cost(x, cost) <= 0.0) return;
        cands.push_back(&x);
      });
    for (const Expr* c : cands) {
      const Effects reads = fx.expr(*c).reads;
      if (fx.stmt(list[j]).writes.intersects(reads)) continue;
      int occ = 0;
      std::size_t last = j;
      for (std::size_t k = j; k < list.size(); ++k) {
        if (fx.stmt(list[k]).writes.intersects(reads)) break;
        int here = 0;
        for (Expr* root : eval_roots(list[k])) here += count_matches(*root, *c);
        if (here > 0) last = k;
        occ += here;
        if (list[k].kind == StmtKind::Return || list[k].kind == StmtKind::Break) break;
      }
      if (occ < 2) continue;
      const double decl = cost.at(static_cast<std::size_t>(op_id("Declaration_" + lang::signature(c->type)))) +
                          cost.at(static_cast<std::size_t>(ops::of_assign(c->type, c->type)));
      const double saving = (occ - 1) * expr_cost(*c, cost) - decl;
      if (saving > best.saving) best = CseChoice{&list, j, last, *c, saving};
    }
  }
  for (auto& s : list) {
    for (auto* sub : {&s.body, &s.else_body}) cse_scan(*sub, fx, cost, best);
    for (auto& arm : s.arms) cse_scan(arm.body, fx, cost, best);
  }
}

}  // namespace

Refactoring apply_if_combination(const lang::CheckedProgram& cp, const std::string& method) {
  Program p = cp.program();
  const int mi = p.method_index(method);
  if (mi < 0) return refuse("no method '" + method + "'");
  const EffectAnalysis fx(cp.program());
  int merged = 0;
  while (merge_once(p.methods[static_cast<std::size_t>(mi)].body, fx, merged)) {
  }
  if (merged == 0) return refuse("no pair of if statements with the same unaffected predicate in " + method + "()");
  return done(std::move(p), "combined " + std::to_string(merged) + " pair(s) of if statements in " + method + "()");
}

Refactoring apply_method_inline(const lang::CheckedProgram& cp, const std::string& callee, const std::string& caller,
                                int max_statements) {
  Program p = cp.program();
  const int ci = p.method_index(callee);
  if (ci < 0) return refuse("no method '" + callee + "'");
  const EffectAnalysis fx(cp.program());
  if (fx.recursive(ci)) return refuse(callee + "() is recursive");
  const MethodDecl m = p.methods[static_cast<std::size_t>(ci)];
  const int size = count_statements(m.body);
  if (size > max_statements)
    return refuse(callee + "() has " + std::to_string(size) + " statements, over the limit of " +
                  std::to_string(max_statements));

  const bool accessor = m.body.size() == 1 && m.body[0].kind == StmtKind::Return && !m.body[0].exprs.empty() &&
                        fx.pure(m.body[0].exprs[0]) && !calls_user_method(m.body[0].exprs[0]);
  int returns = 0;
  for_each_stmt(m.body, [&](const Stmt& s) { returns += s.kind == StmtKind::Return ? 1 : 0; });
  const bool final_return = !m.body.empty() && m.body.back().kind == StmtKind::Return;
  const bool splice = m.return_type.kind == TypeKind::Void && returns == (final_return ? 1 : 0);
  if (!accessor && !splice) return refuse(callee + "() is neither void without early returns nor a single return");

  std::vector<int> callers;
  if (!caller.empty()) {
    const int k = p.method_index(caller);
    if (k < 0) return refuse("no method '" + caller + "'");
    if (k == ci) return refuse("cannot inline a method into itself");
    callers.push_back(k);
  } else {
    for (int k = 0; k < static_cast<int>(p.methods.size()); ++k)
      if (k != ci) callers.push_back(k);
  }

  std::set<std::string> callee_globals;
  for (const auto& s : m.body)
    for_each_expr(s, [&](const Expr& e) {
      if (e.kind == ExprKind::Var && e.global >= 0) callee_globals.insert(e.name);
    });
  std::set<std::string> used = used_names(p);
  int sites = 0;
  std::vector<std::string> skipped;

  for (int k : callers) {
    MethodDecl& target = p.methods[static_cast<std::size_t>(k)];
    std::set<std::string> locals = declared_names(target.body);
    for (const auto& prm : target.params) locals.insert(prm.name);
    bool shadowed = false;
    for (const auto& g : callee_globals) shadowed = shadowed || locals.count(g);
    if (shadowed) {
      skipped.push_back(target.name + "() shadows a global the callee reads");
      continue;
    }

    if (accessor) {
      const Expr& value = m.body[0].exprs[0];
      for (auto& s : target.body)
        for_each_expr_mut(s, [&](Expr& e) {
          if (e.kind != ExprKind::Call || e.method != ci) return;
          for (std::size_t a = 0; a < e.operands.size(); ++a) {
            const Type& pt = m.params[a].type;
            const Expr& arg = e.operands[a];
            if (!is_simple(arg) || (pt.kind == TypeKind::Object && arg.type != pt) ||
                (pt.is_array() && arg.type != pt))
              return;
          }
          Expr body = value;
          for_each_expr_mut(body, [&](Expr& x) {
            if (x.kind != ExprKind::Var || x.slot < 0) return;
            const auto a = static_cast<std::size_t>(x.slot);
            Expr arg = e.operands[a];
            if (arg.type != m.params[a].type) {
              Expr cast;
              cast.kind = ExprKind::Cast;
              cast.target = m.params[a].type;
              cast.operands.push_back(std::move(arg));
              arg = std::move(cast);
            }
            x = std::move(arg);
          });
          if (value.type != m.return_type && m.return_type.is_numeric()) {
            Expr cast;
            cast.kind = ExprKind::Cast;
            cast.target = m.return_type;
            cast.operands.push_back(std::move(body));
            body = std::move(cast);
          }
          body.pos = e.pos;
          e = std::move(body);
          ++sites;
        });
      continue;
    }

    // Statement splice of a void callee.
    std::function<void(std::vector<Stmt>&)> walk = [&](std::vector<Stmt>& list) {
      for (std::size_t idx = 0; idx < list.size(); ++idx) {
        Stmt& s = list[idx];
        for (auto* sub : {&s.body, &s.else_body}) walk(*sub);
        for (auto& arm : s.arms) walk(arm.body);
        if (s.kind != StmtKind::Call || s.exprs[0].method != ci) continue;
        const Expr call = s.exprs[0];
        std::vector<Stmt> seq;
        std::map<int, std::string> rename;
        std::map<int, Expr> subst;
        for (std::size_t a = 0; a < m.params.size(); ++a) {
          const int slot = static_cast<int>(a);
          const Expr& arg = call.operands[a];
          if (!local_written(m, slot) && is_simple(arg) && arg.type == m.params[a].type) {
            subst.emplace(slot, arg);
          } else {
            const std::string name = fresh_name(callee + "_" + m.params[a].name, used);
            seq.push_back(Stmt::var_decl(m.params[a].type, name, {arg}, call.pos));
            rename.emplace(slot, name);
          }
        }
        std::vector<Stmt> body = m.body;
        if (final_return) body.pop_back();
        for_each_stmt(body, [&](const Stmt& x) {
          if (x.kind == StmtKind::VarDecl) rename.emplace(x.slot, fresh_name(callee + "_" + x.name, used));
        });
        for_each_stmt_mut(body, [&](Stmt& x) {
          if (x.kind == StmtKind::VarDecl) x.name = rename.at(x.slot);
          for (auto& root : x.exprs)
            for_each_expr_mut(root, [&](Expr& e) {
              if (e.kind != ExprKind::Var || e.slot < 0) return;
              if (auto it = subst.find(e.slot); it != subst.end()) {
                e = it->second;
              } else if (auto r = rename.find(e.slot); r != rename.end()) {
                e.name = r->second;
              }
            });
        });
        seq.insert(seq.end(), body.begin(), body.end());
        list.erase(list.begin() + static_cast<std::ptrdiff_t>(idx));
        list.insert(list.begin() + static_cast<std::ptrdiff_t>(idx), seq.begin(), seq.end());
        idx += seq.size();
        --idx;
        ++sites;
      }
    };
    walk(target.body);
  }
  if (sites == 0) {
    std::string why = "no inlinable call site of " + callee + "()";
    for (const auto& s : skipped) why += "; " + s;
    return refuse(why);
  }
  return done(std::move(p), "inlined " + callee + "() at " + std::to_string(sites) + " call site(s)" +
                                (caller.empty() ? "" : " in " + caller + "()"));
}

Refactoring apply_loop_invariant_motion(const lang::CheckedProgram& cp, const std::string& loop_block) {
  auto located = locate_loop(cp, loop_block);
  if (auto* why = std::get_if<std::string>(&located)) return refuse(*why);
  auto& site = std::get<LoopSite>(located);
  const EffectAnalysis fx(cp.program());
  Stmt& loop = site.ref.get();
  const MethodDecl& m = site.program.methods[static_cast<std::size_t>(site.method)];

  Effects loop_writes = fx.stmts(loop.body).writes;
  loop_writes.merge(fx.stmts(loop.update).writes);
  loop_writes.merge(fx.stmts(loop.init).writes);
  loop_writes.merge(fx.expr(loop.exprs[0]).writes);

  std::set<std::string> used = used_names(site.program);
  std::vector<Stmt> hoisted;
  std::vector<std::pair<Expr, std::string>> temps;
  std::function<void(Expr&, bool)> visit = [&](Expr& e, bool whole) {
    const bool candidate = !whole && !is_simple(e) && storable(e.type) && op_node_count(e) > 0 &&
                           !calls_user_method(e) && fx.pure(e) && !loop_writes.intersects(fx.expr(e).reads);
    if (!candidate) {
      for (auto& o : e.operands) visit(o, false);
      return;
    }
    for (const auto& [expr, name] : temps)
      if (lang::structurally_equal(expr, e)) {
        e = Expr::var(name, e.pos);
        return;
      }
    const std::string name = fresh_name(hint_name(e), used);
    temps.emplace_back(e, name);
    hoisted.push_back(Stmt::var_decl(e.type, name, {e}, e.pos));
    e = Expr::var(name, e.pos);
  };
  visit(loop.exprs[0], true);
  const std::size_t hoisted_exprs = hoisted.size();

  // Initialized top-level declarations of the body become assignments to a
  // variable declared once in front of the loop.
  std::map<std::string, int> decl_count;
  for_each_stmt(m.body, [&](const Stmt& s) {
    if (s.kind == StmtKind::VarDecl) ++decl_count[s.name];
  });
  for (const auto& prm : m.params) ++decl_count[prm.name];
  std::size_t hoisted_decls = 0;
  for (auto& s : loop.body) {
    if (s.kind != StmtKind::VarDecl || s.exprs.empty() || decl_count[s.name] != 1) continue;
    hoisted.push_back(Stmt::var_decl(s.decl_type, s.name, {}, s.pos));
    Stmt assign = Stmt::assign(Expr::var(s.name, s.pos), s.exprs[0], s.pos);
    s = std::move(assign);
    ++hoisted_decls;
  }
  if (hoisted.empty()) return refuse("nothing in " + loop_block + " is loop-invariant");
  site.ref.list->insert(site.ref.list->begin() + static_cast<std::ptrdiff_t>(site.ref.index), hoisted.begin(),
                        hoisted.end());
  return done(std::move(site.program), "hoisted " + std::to_string(hoisted_exprs) + " invariant expression(s) and " +
                                           std::to_string(hoisted_decls) + " declaration(s) out of " + loop_block);
}

Refactoring apply_loop_unroll(const lang::CheckedProgram& cp, const std::string& loop_block, int factor,
                              const std::vector<int>& allowed) {
  auto located = locate_loop(cp, loop_block);
  if (auto* why = std::get_if<std::string>(&located)) return refuse(*why);
  auto& site = std::get<LoopSite>(located);
  Stmt& loop = site.ref.get();
  const MethodDecl& m = site.program.methods[static_cast<std::size_t>(site.method)];
  const auto parsed = counted_loop(site.program, m, loop);
  if (auto* why = std::get_if<std::string>(&parsed)) return refuse(*why);
  const auto& c = std::get<CountedLoop>(parsed);
  if (has_own_break(loop.body)) return refuse("body contains break");
  const auto bound = const_int(site.program, m, *c.bound);
  if (!bound) return refuse("trip count is not known at refactoring time");
  const std::int64_t range = *bound - c.start;
  if (range <= 0) return refuse("loop never iterates");

  int f = factor;
  if (f == 0) {
    std::vector<int> sorted = allowed;
    std::sort(sorted.rbegin(), sorted.rend());
    for (int x : sorted)
      if (x > 1 && range % (static_cast<std::int64_t>(x) * c.stride) == 0) {
        f = x;
        break;
      }
    if (f == 0) return refuse("no allowed factor divides the trip range " + std::to_string(range));
  } else {
    if (std::find(allowed.begin(), allowed.end(), f) == allowed.end() || f < 2)
      return refuse("factor " + std::to_string(f) + " is not allowed");
    if (range % (static_cast<std::int64_t>(f) * c.stride) != 0)
      return refuse("factor " + std::to_string(f) + " times stride " + std::to_string(c.stride) +
                    " does not divide the trip range " + std::to_string(range));
  }

  std::set<std::string> used = used_names(site.program);
  std::vector<Stmt> body;
  for (int k = 0; k < f; ++k) {
    std::vector<Stmt> copy = loop.body;
    if (k > 0) {
      std::map<int, std::string> rename;
      for (const auto& s : copy)
        if (s.kind == StmtKind::VarDecl) rename.emplace(s.slot, fresh_name(s.name + "_" + std::to_string(k), used));
      const std::int64_t offset = k * c.stride;
      for_each_stmt_mut(copy, [&](Stmt& s) {
        if (s.kind == StmtKind::VarDecl)
          if (auto it = rename.find(s.slot); it != rename.end()) s.name = it->second;
        for (auto& root : s.exprs) {
          for_each_expr_mut(root, [&](Expr& e) {
            if (e.kind != ExprKind::Var || e.slot < 0) return;
            if (e.slot == c.ivar) {
              Expr var = e;
              var.slot = -1;  // keeps the walk from revisiting the index
              e = Expr::binary(BinaryOp::Add, std::move(var), Expr::int_lit(offset), e.pos);
            } else if (auto it = rename.find(e.slot); it != rename.end()) {
              e.name = it->second;
            }
          });
          merge_offsets(root, c.name);
        }
      });
    }
    body.insert(body.end(), copy.begin(), copy.end());
  }
  const std::int64_t step = static_cast<std::int64_t>(f) * c.stride;
  loop.body = std::move(body);
  loop.update = {Stmt::assign(Expr::var(c.name), Expr::binary(BinaryOp::Add, Expr::var(c.name), Expr::int_lit(step)))};
  return done(std::move(site.program), "unrolled " + loop_block + " by " + std::to_string(f) + ": step " +
                                           std::to_string(c.stride) + " -> " + std::to_string(step) + ", " +
                                           std::to_string(range / c.stride) + " -> " +
                                           std::to_string(range / step) + " iterations per entry");
}

Refactoring apply_library_replacement(const lang::CheckedProgram& cp, const std::string& loop_block,
                                      const std::string& pattern) {
  if (pattern != "buffer_copy") return refuse("unknown replacement pattern '" + pattern + "'");
  auto located = locate_loop(cp, loop_block);
  if (auto* why = std::get_if<std::string>(&located)) return refuse(*why);
  auto& site = std::get<LoopSite>(located);
  Stmt& loop = site.ref.get();
  const MethodDecl& m = site.program.methods[static_cast<std::size_t>(site.method)];
  const auto parsed = counted_loop(site.program, m, loop);
  if (auto* why = std::get_if<std::string>(&parsed)) return refuse(*why);
  const auto& c = std::get<CountedLoop>(parsed);
  if (c.start != 0) return refuse("copy does not start at element 0");

  auto is_lib = [](const Expr& e, const char* name) {
    return e.kind == ExprKind::Call && e.library >= 0 && lang::library_function(e.library).name == name;
  };
  // The bound is the source's limit, directly or through a local set once.
  const Expr* limit = c.bound;
  if (limit->kind == ExprKind::Var && limit->slot >= 0 && !local_written(m, limit->slot)) {
    const Expr* init = nullptr;
    for_each_stmt(m.body, [&](const Stmt& s) {
      if (s.kind == StmtKind::VarDecl && s.slot == limit->slot && !s.exprs.empty()) init = &s.exprs[0];
    });
    if (init) limit = init;
  }
  if (!is_lib(*limit, "buffer_limit") || limit->operands[0].kind != ExprKind::Var)
    return refuse("bound is not the source buffer's limit");
  const Expr& src = limit->operands[0];

  if (loop.body.size() != static_cast<std::size_t>(c.stride))
    return refuse("body is not one put per element of the stride");
  const Expr* dst = nullptr;
  for (std::size_t k = 0; k < loop.body.size(); ++k) {
    const Stmt& s = loop.body[k];
    if (s.kind != StmtKind::Call || !is_lib(s.exprs[0], "buffer_put")) return refuse("body is not a pure element copy");
    const Expr& put = s.exprs[0];
    const Expr& get = put.operands[1];
    if (put.operands[0].kind != ExprKind::Var || !is_lib(get, "buffer_get") ||
        !lang::structurally_equal(get.operands[0], src))
      return refuse("body is not a pure element copy");
    if (dst && !lang::structurally_equal(*dst, put.operands[0])) return refuse("copy writes more than one sink");
    dst = &put.operands[0];
    const Expr& idx = get.operands[1];
    const bool plain = k == 0 && idx.kind == ExprKind::Var && idx.slot == c.ivar;
    const bool offset = idx.kind == ExprKind::Binary && idx.binary_op == BinaryOp::Add &&
                        idx.operands[0].kind == ExprKind::Var && idx.operands[0].slot == c.ivar &&
                        idx.operands[1].kind == ExprKind::IntLit &&
                        idx.operands[1].int_value == static_cast<std::int64_t>(k);
    if (!plain && !offset) return refuse("elements are not copied in order");
  }
  if (src.global < 0 || dst->global < 0 || src.global == dst->global || !unique_buffer_global(site.program, src.global) ||
      !unique_buffer_global(site.program, dst->global))
    return refuse("source and sink may reference the same buffer");
  if (c.stride > 1) {
    const auto n = const_int(site.program, m, *limit);
    if (!n || *n % c.stride != 0) return refuse("source length is not a known multiple of the stride");
  }
  Stmt bulk = Stmt::call_stmt(Expr::call("buffer_bulk_put", {*dst, src}, loop.pos), loop.pos);
  const std::string text = lang::pretty_print(std::vector<Stmt>{bulk});
  site.ref.list->at(site.ref.index) = std::move(bulk);
  return done(std::move(site.program), "replaced the element copy loop " + loop_block + " by " +
                                           text.substr(0, text.find('\n')));
}

Refactoring apply_constant_fold_propagate(const lang::CheckedProgram& cp, const std::string& method) {
  const int mi = cp.program().method_index(method);
  if (mi < 0) return refuse("no method '" + method + "'");
  Program p = cp.program();
  MethodDecl& m = p.methods[static_cast<std::size_t>(mi)];
  const std::string before = lang::pretty_print(m.body);
  int folded = 0;
  int propagated = 0;
  for (int round = 0; round < 16; ++round) {
    bool changed = false;
    for_each_stmt_mut(m.body, [&](Stmt& s) {
      for (auto& e : s.exprs)
        if (fold(e)) {
          changed = true;
          ++folded;
        }
    });
    // Locals initialized with a literal and never reassigned.
    std::map<int, Expr> consts;
    for_each_stmt(m.body, [&](const Stmt& s) {
      if (s.kind != StmtKind::VarDecl || s.exprs.empty() || s.slot < 0 || local_written(m, s.slot)) return;
      if (auto lit = literal_for(s.decl_type, s.exprs[0])) consts.emplace(s.slot, *lit);
    });
    for_each_stmt_mut(m.body, [&](Stmt& s) {
      const bool target_var = (s.kind == StmtKind::Assign || s.kind == StmtKind::IncDec);
      for (std::size_t r = 0; r < s.exprs.size(); ++r) {
        if (target_var && r == 0 && s.exprs[0].kind == ExprKind::Var) continue;
        for_each_expr_mut(s.exprs[r], [&](Expr& e) {
          if (e.kind != ExprKind::Var || e.slot < 0) return;
          if (auto it = consts.find(e.slot); it != consts.end()) {
            const SourcePos pos = e.pos;
            e = it->second;
            e.pos = pos;
            changed = true;
            ++propagated;
          }
        });
      }
    });
    if (!changed) break;
  }
  if (lang::pretty_print(m.body) == before) return refuse("nothing to fold in " + method + "()");
  return done(std::move(p), "folded " + std::to_string(folded) + " expression(s) and propagated " +
                                std::to_string(propagated) + " constant read(s) in " + method + "()");
}

Refactoring apply_cse(const lang::CheckedProgram& cp, const std::string& method, const std::vector<double>& cost_uJ) {
  if (cp.program().method_index(method) < 0) return refuse("no method '" + method + "'");
  if (cost_uJ.size() != op_universe().size()) throw Error("input", "CSE needs a cost for every operation");
  lang::CheckedProgram current = cp;
  int bound = 0;
  double saving = 0.0;
  for (int round = 0; round < 16; ++round) {
    Program p = current.program();
    const EffectAnalysis fx(current.program());
    CseChoice best;
    cse_scan(p.methods[static_cast<std::size_t>(p.method_index(method))].body, fx, cost_uJ, best);
    if (!best.list) break;
    std::set<std::string> used = used_names(p);
    const std::string name = fresh_name("common", used);
    for (std::size_t k = best.first; k <= best.last; ++k)
      for (Expr* root : eval_roots((*best.list)[k])) replace_matches(*root, best.expr, name);
    best.list->insert(best.list->begin() + static_cast<std::ptrdiff_t>(best.first),
                      Stmt::var_decl(best.expr.type, name, {best.expr}, best.expr.pos));
    current = opt::recheck(p);
    ++bound;
    saving += best.saving;
  }
  if (bound == 0) return refuse("no repeated subexpression in " + method + "() saves more than its declaration costs");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", saving);
  return done(current.program(), "bound " + std::to_string(bound) + " repeated subexpression(s) in " + method +
                                     "() to temporaries, " + buf + " uJ saved per execution");
}

Refactoring apply_strategy(const lang::CheckedProgram& cp, const Strategy& s, const OptimizeConfig& cfg,
                           const std::vector<double>& cost_uJ) {
  switch (s.kind) {
    case StrategyKind::IfCombination: return apply_if_combination(cp, s.target);
    case StrategyKind::MethodInline: return apply_method_inline(cp, s.target, s.caller, cfg.inline_max_statements);
    case StrategyKind::LoopInvariantMotion: return apply_loop_invariant_motion(cp, s.target);
    case StrategyKind::LoopUnroll: return apply_loop_unroll(cp, s.target, s.factor, cfg.unroll_factors);
    case StrategyKind::ConstantFoldPropagate: return apply_constant_fold_propagate(cp, s.target);
    case StrategyKind::CommonSubexprElim: return apply_cse(cp, s.target, cost_uJ);
    case StrategyKind::LibraryReplacement: return apply_library_replacement(cp, s.target, s.pattern);
    case StrategyKind::LoopUnswitching:
    case StrategyKind::InductionVariableElim: return refuse(std::string(to_string(s.kind)) + " is not implemented");
  }
  return refuse("unknown strategy");
}

}  // namespace enerlyze
