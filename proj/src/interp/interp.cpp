#include "enerlyze/interp.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "enerlyze/lang/library.hpp"
#include "enerlyze/random.hpp"

namespace enerlyze {

using lang::BinaryOp;
using lang::Expr;
using lang::ExprKind;
using lang::Stmt;
using lang::StmtKind;
using lang::Type;
using lang::TypeKind;

std::int64_t ExecutionLog::count(std::string_view block_id) const {
  for (std::size_t i = 0; i < block_ids.size(); ++i)
    if (block_ids[i] == block_id) return block_counts[i];
  throw Error("input", "unknown block id '" + std::string(block_id) + "'");
}

namespace {

// Scalars live in `i` (int, bool, reference: heap index + 1, 0 is null) or
// `f` (float); static types say which.
struct Value {
  std::int64_t i = 0;
  double f = 0.0;
};

struct Fault {
  std::string message;
};

enum class ObjKind { Record, IntArray, FloatArray, CharArray, List, Buffer };

struct Obj {
  ObjKind kind = ObjKind::Record;
  int record = -1;
  std::vector<Value> slots;        // record fields, list elements
  std::vector<std::int64_t> ints;  // int and char arrays
  std::vector<double> floats;      // float arrays, buffer contents
  std::int64_t position = 0;       // buffers
};

static_assert(std::is_nothrow_move_constructible_v<Obj>);

constexpr std::size_t kMaxObjects = std::size_t{1} << 22;
constexpr std::int64_t kMaxLength = std::int64_t{1} << 26;

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

std::int64_t float_to_int(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 9223372036854775807.0) return std::numeric_limits<std::int64_t>::max();
  if (d <= -9223372036854775808.0) return std::numeric_limits<std::int64_t>::min();
  return static_cast<std::int64_t>(d);
}

double as_float(Value v, const Type& t) { return t.kind == TypeKind::Float ? v.f : static_cast<double>(v.i); }

Value convert(Value v, const Type& from, const Type& to) {
  if (to.kind == TypeKind::Float && from.kind == TypeKind::Int) return Value{0, static_cast<double>(v.i)};
  return v;
}

enum class Flow { Normal, Break, Return };

class Machine {
 public:
  Machine(const lang::CheckedProgram& cp, const BlockMap& bm, const RunConfig& cfg, bool trace)
      : cp_(cp), bm_(bm), cfg_(cfg), trace_(trace) {
    counts_.assign(bm.blocks.size(), 0);
    ablated_.assign(bm.blocks.size(), 0);
    globals_.resize(cp.program().globals.size());
    if (trace_) tally_.assign(op_universe().size(), 0);
  }

  void ablate(const std::vector<std::string>& ids) {
    for (const auto& id : ids) {
      const int b = bm_.index_of(id);
      if (!bm_.blocks[static_cast<std::size_t>(b)].ablatable)
        throw Error("input", "block '" + id + "' is not ablatable");
      ablated_[static_cast<std::size_t>(b)] = 1;
    }
  }

  void execute(const ExecutionCase& c) {
    const auto& prog = cp_.program();
    const int init = prog.method_index(cfg_.init_method);
    const int entry = prog.method_index(cfg_.entry_method);
    if (entry < 0) throw Error("input", "entry method '" + cfg_.entry_method + "' not found");
    const auto& em = cp_.method(entry);
    for (const auto& ev : c.inputs)
      if (ev.values.size() != em.params.size())
        throw Error("input", "case '" + c.case_id + "': input event at frame " + std::to_string(ev.frame) + " has " +
                                 std::to_string(ev.values.size()) + " values, entry method takes " +
                                 std::to_string(em.params.size()));
    if (init >= 0 && init != entry) call(init, {});
    std::vector<Value> args(em.params.size());
    std::size_t next_event = 0;
    for (std::int64_t frame = 0; frame < c.frame_budget; ++frame) {
      while (next_event < c.inputs.size() && c.inputs[next_event].frame <= frame) {
        const auto& vals = c.inputs[next_event++].values;
        for (std::size_t k = 0; k < args.size(); ++k) {
          const Type& t = em.params[k].type;
          if (t.kind == TypeKind::Float) args[k] = Value{0, vals[k]};
          else if (t.kind == TypeKind::Bool) args[k] = Value{vals[k] != 0.0, 0.0};
          else args[k] = Value{float_to_int(vals[k]), 0.0};
        }
      }
      const Value r = call(entry, args);
      if (em.return_type.kind != TypeKind::Void) {
        out_.add_u64('r');
        hash_scalar(out_, r, em.return_type);
      }
    }
  }

  std::string state_digest() const {
    Fnv1a h;
    std::unordered_map<std::int64_t, std::uint64_t> ids;
    std::deque<std::int64_t> queue;
    auto ref = [&](std::int64_t r) {
      if (r == 0) {
        h.add_u64(0);
        return;
      }
      auto [it, fresh] = ids.emplace(r, ids.size() + 1);
      if (fresh) queue.push_back(r);
      h.add_u64(it->second);
    };
    auto value = [&](Value v, const Type& t) {
      if (t.is_reference()) ref(v.i);
      else hash_scalar(h, v, t);
    };
    const auto& prog = cp_.program();
    for (std::size_t g = 0; g < prog.globals.size(); ++g) value(globals_[g], prog.globals[g].type);
    while (!queue.empty()) {
      const Obj& o = heap_[static_cast<std::size_t>(queue.front() - 1)];
      queue.pop_front();
      h.add_u64(static_cast<std::uint64_t>(o.kind));
      switch (o.kind) {
        case ObjKind::Record: {
          const auto& rec = cp_.record(o.record);
          h.add_string(rec.name);
          for (std::size_t k = 0; k < o.slots.size(); ++k) value(o.slots[k], rec.fields[k].type);
          break;
        }
        case ObjKind::List:
          h.add_u64(o.slots.size());
          for (const auto& v : o.slots) ref(v.i);
          break;
        case ObjKind::IntArray:
        case ObjKind::CharArray:
          h.add_u64(o.ints.size());
          for (auto v : o.ints) h.add_u64(static_cast<std::uint64_t>(v));
          break;
        case ObjKind::Buffer:
          h.add_u64(static_cast<std::uint64_t>(o.position));
          [[fallthrough]];
        case ObjKind::FloatArray:
          h.add_u64(o.floats.size());
          for (auto v : o.floats) h.add_u64(std::bit_cast<std::uint64_t>(v));
          break;
      }
    }
    return hex64(h.value());
  }

  std::vector<std::int64_t> counts_;
  OpCountVector tally_;
  Fnv1a out_;
  std::int64_t steps_ = 0;
  int current_block_ = -1;

 private:
  struct Frame {
    std::vector<Value> locals;
    int method = -1;
  };

  static void hash_scalar(Fnv1a& h, Value v, const Type& t) {
    if (t.kind == TypeKind::Float) {
      h.add_u64('f');
      h.add_u64(std::bit_cast<std::uint64_t>(v.f));
    } else {
      h.add_u64(t.kind == TypeKind::Bool ? 'b' : 'i');
      h.add_u64(static_cast<std::uint64_t>(v.i));
    }
  }

  // Statement and loop-iteration budget; loop headers count too so that an
  // empty infinite loop still terminates.
  void tick() {
    if (++work_ > cfg_.max_steps)
      throw Fault{"step budget of " + std::to_string(cfg_.max_steps) + " exceeded"};
  }

  void enter(int block) { ++counts_[static_cast<std::size_t>(block)]; }
  bool skipped(int block) const { return ablated_[static_cast<std::size_t>(block)] != 0; }

  void op(int id) {
    if (trace_) ++tally_[static_cast<std::size_t>(id)];
  }

  // The trace looks operation ids up by node; the lookup builds names, so
  // cache them.
  int expr_op(const Expr& e) {
    auto [it, fresh] = expr_ops_.emplace(&e, -1);
    if (fresh) it->second = ops::of_expr(e);
    return it->second;
  }
  enum OpSlot { kDeclOp, kAssignOp, kReturnOp };
  int stmt_op(const Stmt& s, OpSlot which, const std::function<int()>& compute) {
    auto [it, fresh] = stmt_ops_[which].emplace(&s, -1);
    if (fresh) it->second = compute();
    return it->second;
  }

  Obj& deref(std::int64_t r) {
    if (r == 0) throw Fault{"null dereference"};
    return heap_[static_cast<std::size_t>(r - 1)];
  }

  std::int64_t alloc(Obj o) {
    if (heap_.size() >= kMaxObjects) throw Fault{"heap exhausted"};
    heap_.push_back(std::move(o));
    return static_cast<std::int64_t>(heap_.size());
  }

  static void check_index(std::int64_t i, std::size_t n) {
    if (i < 0 || static_cast<std::uint64_t>(i) >= n)
      throw Fault{"index " + std::to_string(i) + " out of bounds for length " + std::to_string(n)};
  }

  Obj& expect(std::int64_t r, ObjKind kind, const char* what) {
    Obj& o = deref(r);
    if (o.kind != kind) throw Fault{std::string("argument is not a ") + what};
    return o;
  }

  Value call(int m, const std::vector<Value>& args) {
    if (static_cast<int>(frames_.size()) >= cfg_.max_call_depth) throw Fault{"call depth exceeded"};
    const auto& md = cp_.method(m);
    Frame f;
    f.method = m;
    f.locals.resize(static_cast<std::size_t>(md.num_slots));
    std::copy(args.begin(), args.end(), f.locals.begin());
    frames_.push_back(std::move(f));
    enter(bm_.method_entry[static_cast<std::size_t>(m)]);
    const int saved_block = current_block_;
    current_block_ = bm_.method_entry[static_cast<std::size_t>(m)];
    ret_ = Value{};
    exec_list(md.body);
    frames_.pop_back();
    current_block_ = saved_block;
    const Value r = ret_;
    ret_ = Value{};
    return r;
  }

  Flow exec_list(const std::vector<Stmt>& list) {
    for (const auto& s : list) {
      const int cont = bm_.cont_block[static_cast<std::size_t>(s.id)];
      if (cont >= 0) enter(cont);
      const Flow f = exec(s);
      if (f != Flow::Normal) return f;
    }
    return Flow::Normal;
  }

  // Runs a nested statement list that forms `block`, unless ablated.
  Flow body(int block, const std::vector<Stmt>& list) {
    if (skipped(block)) return Flow::Normal;
    enter(block);
    return exec_list(list);
  }

  Value& local(int slot) { return frames_.back().locals[static_cast<std::size_t>(slot)]; }

  // Location of an assignment target. Evaluates the target's subexpressions
  // (and counts their operations) once.
  struct Place {
    Value* slot = nullptr;
    std::int64_t* int_elem = nullptr;
    double* float_elem = nullptr;
  };

  Place place(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Var:
        return {e.slot >= 0 ? &local(e.slot) : &globals_[static_cast<std::size_t>(e.global)], nullptr, nullptr};
      case ExprKind::Field: {
        op(expr_op(e));
        const Value obj = eval(e.operands[0]);
        Obj& o = deref(obj.i);
        return {&o.slots[static_cast<std::size_t>(e.field_index)], nullptr, nullptr};
      }
      case ExprKind::Index: {
        op(expr_op(e));
        const Value arr = eval(e.operands[0]);
        const Value idx = eval(e.operands[1]);
        Obj& o = deref(arr.i);
        if (o.kind == ObjKind::FloatArray) {
          check_index(idx.i, o.floats.size());
          return {nullptr, nullptr, &o.floats[static_cast<std::size_t>(idx.i)]};
        }
        check_index(idx.i, o.ints.size());
        return {nullptr, &o.ints[static_cast<std::size_t>(idx.i)], nullptr};
      }
      default: throw Error("internal", "expression is not assignable");
    }
  }

  static Value load(const Place& p) {
    if (p.slot) return *p.slot;
    if (p.int_elem) return Value{*p.int_elem, 0.0};
    return Value{0, *p.float_elem};
  }

  static void store(const Place& p, Value v) {
    if (p.slot) *p.slot = v;
    else if (p.int_elem) *p.int_elem = v.i;
    else *p.float_elem = v.f;
  }

  Flow exec(const Stmt& s) {
    tick();
    ++steps_;
    const auto sid = static_cast<std::size_t>(s.id);
    current_block_ = bm_.stmt_block[sid];
    switch (s.kind) {
      case StmtKind::VarDecl: {
        op(stmt_op(s, kDeclOp, [&] { return ops::of_declaration(s); }));
        Value v;
        if (!s.exprs.empty()) {
          op(assign_op(s, s.decl_type, s.exprs[0].type));
          v = convert(eval(s.exprs[0]), s.exprs[0].type, s.decl_type);
        }
        local(s.slot) = v;
        return Flow::Normal;
      }
      case StmtKind::Assign: {
        const Expr& target = s.exprs[0];
        const Expr& value = s.exprs[1];
        op(assign_op(s, target.type, value.type));
        // Places point into record slots and array storage, which never
        // resize; heap growth moves objects but keeps their buffers.
        const Place p = place(target);
        store(p, convert(eval(value), value.type, target.type));
        return Flow::Normal;
      }
      case StmtKind::IncDec: {
        op(s.increment ? ops::increment() : ops::decrement());
        const Place p = place(s.exprs[0]);
        Value v = load(p);
        v.i = s.increment ? wrap_add(v.i, 1) : wrap_sub(v.i, 1);
        store(p, v);
        return Flow::Normal;
      }
      case StmtKind::If: {
        op(ops::block_goto_if());
        if (eval(s.exprs[0]).i) return body(bm_.then_block[sid], s.body);
        if (s.has_else) return body(bm_.else_block[sid], s.else_body);
        return Flow::Normal;
      }
      case StmtKind::For: {
        enter(bm_.init_block[sid]);
        for (const auto& x : s.init) exec(x);
        const int cond = bm_.cond_block[sid];
        const int body_b = bm_.body_block[sid];
        const int update = bm_.update_block[sid];
        for (;;) {
          tick();
          enter(cond);
          current_block_ = cond;
          if (!eval(s.exprs[0]).i) break;
          if (!skipped(body_b)) {
            enter(body_b);
            op(ops::block_goto_for());
            const Flow f = exec_list(s.body);
            if (f == Flow::Break) break;
            if (f == Flow::Return) return f;
          }
          enter(update);
          for (const auto& x : s.update) exec(x);
        }
        return Flow::Normal;
      }
      case StmtKind::While: {
        const int header = bm_.cond_block[sid];
        const int body_b = bm_.body_block[sid];
        for (;;) {
          tick();
          enter(header);
          current_block_ = header;
          if (!eval(s.exprs[0]).i) break;
          if (skipped(body_b)) continue;
          enter(body_b);
          op(ops::block_goto_while());
          const Flow f = exec_list(s.body);
          if (f == Flow::Break) break;
          if (f == Flow::Return) return f;
        }
        return Flow::Normal;
      }
      case StmtKind::Switch: {
        op(ops::block_goto_switch());
        const std::int64_t v = eval(s.exprs[0]).i;
        int chosen = -1;
        for (std::size_t k = 0; k < s.arms.size() && chosen < 0; ++k)
          if (!s.arms[k].is_default && s.arms[k].value == v) chosen = static_cast<int>(k);
        for (std::size_t k = 0; k < s.arms.size() && chosen < 0; ++k)
          if (s.arms[k].is_default) chosen = static_cast<int>(k);
        if (chosen < 0) return Flow::Normal;
        const auto ck = static_cast<std::size_t>(chosen);
        const Flow f = body(bm_.arm_blocks[sid][ck], s.arms[ck].body);
        return f == Flow::Break ? Flow::Normal : f;
      }
      case StmtKind::Call:
        eval(s.exprs[0]);
        return Flow::Normal;
      case StmtKind::Return: {
        const auto& md = cp_.method(frames_.back().method);
        op(stmt_op(s, kReturnOp, [&] { return ops::of_return(md.return_type); }));
        if (!s.exprs.empty()) ret_ = convert(eval(s.exprs[0]), s.exprs[0].type, md.return_type);
        return Flow::Return;
      }
      case StmtKind::Break: return Flow::Break;
    }
    return Flow::Normal;
  }

  int assign_op(const Stmt& s, const Type& target, const Type& value) {
    return stmt_op(s, kAssignOp, [&] { return ops::of_assign(target, value); });
  }

 public:
  Value eval(const Expr& e) {
    switch (e.kind) {
      case ExprKind::IntLit: return Value{e.int_value, 0.0};
      case ExprKind::FloatLit: return Value{0, e.float_value};
      case ExprKind::BoolLit: return Value{e.bool_value ? 1 : 0, 0.0};
      case ExprKind::NullLit: return Value{};
      case ExprKind::Var: return e.slot >= 0 ? local(e.slot) : globals_[static_cast<std::size_t>(e.global)];
      case ExprKind::Field: {
        op(expr_op(e));
        const Value obj = eval(e.operands[0]);
        return deref(obj.i).slots[static_cast<std::size_t>(e.field_index)];
      }
      case ExprKind::Index: {
        op(expr_op(e));
        const Value arr = eval(e.operands[0]);
        const Value idx = eval(e.operands[1]);
        const Obj& o = deref(arr.i);
        if (o.kind == ObjKind::FloatArray) {
          check_index(idx.i, o.floats.size());
          return Value{0, o.floats[static_cast<std::size_t>(idx.i)]};
        }
        check_index(idx.i, o.ints.size());
        return Value{o.ints[static_cast<std::size_t>(idx.i)], 0.0};
      }
      case ExprKind::Unary: {
        op(expr_op(e));
        const Value v = eval(e.operands[0]);
        if (e.unary_op == lang::UnaryOp::Not) return Value{v.i ? 0 : 1, 0.0};
        if (e.type.kind == TypeKind::Float) return Value{0, -v.f};
        return Value{wrap_sub(0, v.i), 0.0};
      }
      case ExprKind::Binary: {
        op(expr_op(e));
        const Value l = eval(e.operands[0]);
        const Value r = eval(e.operands[1]);
        return binary(e, l, r);
      }
      case ExprKind::Cast: {
        op(expr_op(e));
        const Value v = eval(e.operands[0]);
        if (e.target.kind == TypeKind::Float) return Value{0, static_cast<double>(v.i)};
        return Value{float_to_int(v.f), 0.0};
      }
      case ExprKind::Call: {
        op(expr_op(e));
        std::vector<Value> args;
        args.reserve(e.operands.size());
        if (e.method >= 0) {
          const auto& md = cp_.method(e.method);
          for (std::size_t k = 0; k < e.operands.size(); ++k) {
            if (trace_) op(stmt_param_op(md.params[k].type));
            args.push_back(convert(eval(e.operands[k]), e.operands[k].type, md.params[k].type));
          }
          return call(e.method, args);
        }
        const auto& fn = lang::library_function(e.library);
        for (std::size_t k = 0; k < e.operands.size(); ++k) {
          Value v = eval(e.operands[k]);
          const auto& prm = fn.params[k];
          if (prm.kind == lang::LibraryParam::Kind::Exact) v = convert(v, e.operands[k].type, prm.type);
          args.push_back(v);
        }
        return library(e, args);
      }
      case ExprKind::NewRecord: {
        op(expr_op(e));
        Obj o;
        o.kind = ObjKind::Record;
        o.record = cp_.record_index(e.type.record);
        o.slots.resize(cp_.record(o.record).fields.size());
        return Value{alloc(std::move(o)), 0.0};
      }
      case ExprKind::NewArray: {
        op(expr_op(e));
        const std::int64_t n = eval(e.operands[0]).i;
        if (n < 0 || n > kMaxLength) throw Fault{"invalid array length " + std::to_string(n)};
        Obj o;
        const auto len = static_cast<std::size_t>(n);
        switch (e.target.kind) {
          case TypeKind::FloatArray:
            o.kind = ObjKind::FloatArray;
            o.floats.assign(len, 0.0);
            break;
          case TypeKind::CharArray:
            o.kind = ObjKind::CharArray;
            o.ints.assign(len, 0);
            break;
          default:
            o.kind = ObjKind::IntArray;
            o.ints.assign(len, 0);
        }
        return Value{alloc(std::move(o)), 0.0};
      }
    }
    return Value{};
  }

 private:
  int stmt_param_op(const Type& t) {
    auto [it, fresh] = param_ops_.emplace(lang::signature(t), -1);
    if (fresh) it->second = ops::parameter(t);
    return it->second;
  }

  static Value binary(const Expr& e, Value l, Value r) {
    const Type& lt = e.operands[0].type;
    const Type& rt = e.operands[1].type;
    const bool ints = lt.kind == TypeKind::Int && rt.kind == TypeKind::Int;
    const bool numeric = lt.is_numeric() && rt.is_numeric();
    auto b = [](bool v) { return Value{v ? 1 : 0, 0.0}; };
    switch (e.binary_op) {
      case BinaryOp::Add:
        return ints ? Value{wrap_add(l.i, r.i), 0.0} : Value{0, as_float(l, lt) + as_float(r, rt)};
      case BinaryOp::Sub:
        return ints ? Value{wrap_sub(l.i, r.i), 0.0} : Value{0, as_float(l, lt) - as_float(r, rt)};
      case BinaryOp::Mul:
        return ints ? Value{wrap_mul(l.i, r.i), 0.0} : Value{0, as_float(l, lt) * as_float(r, rt)};
      case BinaryOp::Div:
        if (!ints) return Value{0, as_float(l, lt) / as_float(r, rt)};
        if (r.i == 0) throw Fault{"integer division by zero"};
        if (r.i == -1) return Value{wrap_sub(0, l.i), 0.0};
        return Value{l.i / r.i, 0.0};
      case BinaryOp::Lt: return b(ints ? l.i < r.i : as_float(l, lt) < as_float(r, rt));
      case BinaryOp::Le: return b(ints ? l.i <= r.i : as_float(l, lt) <= as_float(r, rt));
      case BinaryOp::Gt: return b(ints ? l.i > r.i : as_float(l, lt) > as_float(r, rt));
      case BinaryOp::Ge: return b(ints ? l.i >= r.i : as_float(l, lt) >= as_float(r, rt));
      case BinaryOp::Eq:
      case BinaryOp::Ne: {
        const bool eq = numeric && !ints ? as_float(l, lt) == as_float(r, rt) : l.i == r.i;
        return b(e.binary_op == BinaryOp::Eq ? eq : !eq);
      }
      case BinaryOp::And: return b(l.i && r.i);
      case BinaryOp::Or: return b(l.i || r.i);
      case BinaryOp::BitAnd: return Value{l.i & r.i, 0.0};
      case BinaryOp::BitOr: return Value{l.i | r.i, 0.0};
      case BinaryOp::Shl:
        return Value{static_cast<std::int64_t>(static_cast<std::uint64_t>(l.i) << (r.i & 63)), 0.0};
      case BinaryOp::Shr: return Value{l.i >> (r.i & 63), 0.0};
    }
    return Value{};
  }

  Value library(const Expr& e, const std::vector<Value>& a) {
    const std::string& name = lang::library_function(e.library).name;
    auto f = [](double v) { return Value{0, v}; };
    auto i = [](std::int64_t v) { return Value{v, 0.0}; };
    if (name == "list_new") {
      Obj o;
      o.kind = ObjKind::List;
      return i(alloc(std::move(o)));
    }
    if (name == "list_add") {
      expect(a[0].i, ObjKind::List, "list").slots.push_back(a[1]);
      return {};
    }
    if (name == "list_get") {
      const Obj& o = expect(a[0].i, ObjKind::List, "list");
      check_index(a[1].i, o.slots.size());
      return o.slots[static_cast<std::size_t>(a[1].i)];
    }
    if (name == "list_set") {
      Obj& o = expect(a[0].i, ObjKind::List, "list");
      check_index(a[1].i, o.slots.size());
      o.slots[static_cast<std::size_t>(a[1].i)] = a[2];
      return {};
    }
    if (name == "list_size") return i(static_cast<std::int64_t>(expect(a[0].i, ObjKind::List, "list").slots.size()));
    if (name == "buffer_new") {
      if (a[0].i < 0 || a[0].i > kMaxLength) throw Fault{"invalid buffer capacity " + std::to_string(a[0].i)};
      Obj o;
      o.kind = ObjKind::Buffer;
      o.floats.assign(static_cast<std::size_t>(a[0].i), 0.0);
      return i(alloc(std::move(o)));
    }
    if (name == "buffer_put") {
      Obj& o = expect(a[0].i, ObjKind::Buffer, "buffer");
      if (static_cast<std::size_t>(o.position) >= o.floats.size()) throw Fault{"buffer overflow"};
      o.floats[static_cast<std::size_t>(o.position++)] = a[1].f;
      return {};
    }
    if (name == "buffer_get") {
      const Obj& o = expect(a[0].i, ObjKind::Buffer, "buffer");
      check_index(a[1].i, o.floats.size());
      return f(o.floats[static_cast<std::size_t>(a[1].i)]);
    }
    if (name == "buffer_set") {
      Obj& o = expect(a[0].i, ObjKind::Buffer, "buffer");
      check_index(a[1].i, o.floats.size());
      o.floats[static_cast<std::size_t>(a[1].i)] = a[2].f;
      return {};
    }
    if (name == "buffer_limit")
      return i(static_cast<std::int64_t>(expect(a[0].i, ObjKind::Buffer, "buffer").floats.size()));
    if (name == "buffer_position") return i(expect(a[0].i, ObjKind::Buffer, "buffer").position);
    if (name == "buffer_clear") {
      expect(a[0].i, ObjKind::Buffer, "buffer").position = 0;
      return {};
    }
    if (name == "buffer_bulk_put") {
      // Copies the whole source, element 0 to limit, at the destination's
      // position.
      const std::vector<double> src = expect(a[1].i, ObjKind::Buffer, "buffer").floats;
      Obj& dst = expect(a[0].i, ObjKind::Buffer, "buffer");
      const auto pos = static_cast<std::size_t>(dst.position);
      if (pos + src.size() > dst.floats.size()) throw Fault{"buffer overflow"};
      std::copy(src.begin(), src.end(), dst.floats.begin() + static_cast<std::ptrdiff_t>(pos));
      dst.position += static_cast<std::int64_t>(src.size());
      return {};
    }
    if (name == "math_sqrt") return f(std::sqrt(a[0].f));
    if (name == "math_sin") return f(std::sin(a[0].f));
    if (name == "math_cos") return f(std::cos(a[0].f));
    if (name == "math_abs") return f(std::fabs(a[0].f));
    if (name == "math_max") return f(std::fmax(a[0].f, a[1].f));
    if (name == "math_min") return f(std::fmin(a[0].f, a[1].f));
    if (name == "math_floor") return i(float_to_int(std::floor(a[0].f)));
    if (name == "math_imax") return i(std::max(a[0].i, a[1].i));
    if (name == "math_imin") return i(std::min(a[0].i, a[1].i));
    if (name == "math_iabs") return i(a[0].i < 0 ? wrap_sub(0, a[0].i) : a[0].i);
    if (name == "array_length") {
      const Obj& o = deref(a[0].i);
      return i(static_cast<std::int64_t>(o.kind == ObjKind::FloatArray ? o.floats.size() : o.ints.size()));
    }
    if (name == "emit") {
      out_.add_u64('e');
      hash_scalar(out_, a[0], e.operands[0].type);
      return {};
    }
    throw Error("internal", "library function '" + name + "' has no implementation");
  }

  const lang::CheckedProgram& cp_;
  const BlockMap& bm_;
  const RunConfig& cfg_;
  const bool trace_;
  std::vector<char> ablated_;
  std::vector<Value> globals_;
  std::vector<Obj> heap_;
  std::vector<Frame> frames_;
  Value ret_;
  std::int64_t work_ = 0;
  std::unordered_map<const Expr*, int> expr_ops_;
  std::unordered_map<const Stmt*, int> stmt_ops_[3];
  std::unordered_map<std::string, int> param_ops_;
};


ExecutionLog execute(const lang::CheckedProgram& program, const BlockMap& blocks, const ExecutionCase& c,
                     const RunConfig& cfg, bool trace, OpCountVector* tally) {
  Machine m(program, blocks, cfg, trace);
  m.ablate(c.ablated_blocks);
  ExecutionLog log;
  log.case_id = c.case_id;
  log.block_ids = blocks.ids();
  try {
    m.execute(c);
  } catch (const Fault& f) {
    log.failed = true;
    log.error = f.message;
    if (m.current_block_ >= 0) log.failed_block = blocks.blocks[static_cast<std::size_t>(m.current_block_)].id;
  }
  log.block_counts = std::move(m.counts_);
  log.output_digest = hex64(m.out_.value());
  log.state_digest = log.failed ? std::string() : m.state_digest();
  log.step_count = m.steps_;
  log.duration_s = static_cast<double>(m.steps_) * cfg.seconds_per_step;
  if (tally) *tally = std::move(m.tally_);
  return log;
}

}  // namespace

ExecutionLog run(const lang::CheckedProgram& program, const BlockMap& blocks, const ExecutionCase& c,
                 const RunConfig& cfg) {
  return execute(program, blocks, c, cfg, false, nullptr);
}

ExecutionLog run(const lang::CheckedProgram& program, const ExecutionCase& c, const RunConfig& cfg) {
  const BlockMap blocks = divide_blocks(program);
  return run(program, blocks, c, cfg);
}

OpCountVector step_trace(const lang::CheckedProgram& program, const BlockMap& blocks, const ExecutionCase& c,
                         const RunConfig& cfg) {
  OpCountVector tally;
  const auto log = execute(program, blocks, c, cfg, true, &tally);
  if (log.failed) throw Error("runtime", "case '" + c.case_id + "' failed in " + log.failed_block + ": " + log.error);
  return tally;
}

std::vector<ExecutionLog> run_all(const lang::CheckedProgram& program, const BlockMap& blocks,
                                  const std::vector<ExecutionCase>& cases, const RunConfig& cfg, int jobs) {
  std::vector<ExecutionLog> logs(cases.size());
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(cases.size())));
  if (n == 1) {
    for (std::size_t i = 0; i < cases.size(); ++i) logs[i] = run(program, blocks, cases[i], cfg);
    return logs;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (int w = 0; w < n; ++w)
    workers.emplace_back([&] {
      for (std::size_t i; (i = next++) < cases.size();) {
        try {
          logs[i] = run(program, blocks, cases[i], cfg);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return logs;
}

AblationPolicy parse_ablation_policy(std::string_view s) {
  if (s == "cover-once") return AblationPolicy::CoverOnce;
  if (s == "random-k") return AblationPolicy::RandomK;
  throw Error("input", "unknown ablation policy '" + std::string(s) + "' (expected cover-once or random-k)");
}

const char* to_string(AblationPolicy p) { return p == AblationPolicy::CoverOnce ? "cover-once" : "random-k"; }

std::vector<ExecutionCase> generate_cases(const lang::CheckedProgram& program, const BlockMap& blocks,
                                          const CaseDesign& design) {
  if (design.n_cases < 1) throw Error("input", "n_cases must be at least 1");
  if (design.frame_budget < 1) throw Error("input", "frame_budget must be at least 1");
  if (design.replicate_count < 1) throw Error("input", "replicate_count must be at least 1");
  const int entry = program.program().method_index(design.entry_method);
  if (entry < 0) throw Error("input", "entry method '" + design.entry_method + "' not found");
  const auto& params = program.method(entry).params;

  std::vector<int> ablatable = blocks.ablatable();
  const auto n_abl = static_cast<int>(ablatable.size());
  const int k = design.policy == AblationPolicy::CoverOnce
                    ? 1
                    : std::min(n_abl, design.k > 0 ? design.k : std::max(1, n_abl / 3));
  const int capacity = (design.n_cases - 1) * k;
  if (n_abl > capacity) {
    std::string missing;
    for (int b = std::max(capacity, 0); b < n_abl; ++b)
      missing += (missing.empty() ? "" : ", ") + blocks.blocks[static_cast<std::size_t>(ablatable[static_cast<std::size_t>(b)])].id;
    throw Error("input", std::to_string(design.n_cases) + " cases cannot ablate every ablatable block; uncovered: " +
                             missing);
  }

  Rng order_rng(mix_seed(design.seed, 0));
  std::vector<int> order = ablatable;
  order_rng.shuffle(order.begin(), order.end());
  const int cover_cases = n_abl == 0 ? 0 : (n_abl + k - 1) / k;

  std::vector<ExecutionCase> cases;
  cases.reserve(static_cast<std::size_t>(design.n_cases));
  for (int i = 0; i < design.n_cases; ++i) {
    ExecutionCase c;
    char id[32];
    std::snprintf(id, sizeof id, "case_%04d", i);
    c.case_id = id;
    c.replicate_count = design.replicate_count;
    c.frame_budget = design.frame_budget;

    Rng rng(mix_seed(design.seed, 1000 + static_cast<std::uint64_t>(i)));
    std::vector<std::int64_t> frames = {0};
    for (int e = 1; e < design.events_per_case; ++e) frames.push_back(rng.uniform_int(0, design.frame_budget - 1));
    std::sort(frames.begin(), frames.end());
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
    for (auto f : frames) {
      InputEvent ev;
      ev.frame = f;
      for (const auto& prm : params) {
        switch (prm.type.kind) {
          case TypeKind::Float: ev.values.push_back(rng.uniform()); break;
          case TypeKind::Bool: ev.values.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0); break;
          default: ev.values.push_back(static_cast<double>(rng.uniform_int(0, design.int_max)));
        }
      }
      c.inputs.push_back(std::move(ev));
    }

    std::vector<int> chosen;
    if (i > 0 && n_abl > 0) {
      if (design.policy == AblationPolicy::CoverOnce) {
        chosen.push_back(order[static_cast<std::size_t>((i - 1) % n_abl)]);
      } else if (i <= cover_cases) {
        for (int j = (i - 1) * k; j < std::min(n_abl, i * k); ++j) chosen.push_back(order[static_cast<std::size_t>(j)]);
      } else {
        std::vector<int> pool = ablatable;
        rng.shuffle(pool.begin(), pool.end());
        chosen.assign(pool.begin(), pool.begin() + k);
      }
    }
    std::sort(chosen.begin(), chosen.end());
    for (int b : chosen) c.ablated_blocks.push_back(blocks.blocks[static_cast<std::size_t>(b)].id);
    cases.push_back(std::move(c));
  }
  return cases;
}

nlohmann::json case_to_json(const ExecutionCase& c) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& ev : c.inputs) inputs.push_back({{"frame", ev.frame}, {"values", ev.values}});
  return {{"case_id", c.case_id},
          {"inputs", inputs},
          {"ablated_blocks", c.ablated_blocks},
          {"replicate_count", c.replicate_count},
          {"frame_budget", c.frame_budget}};
}

ExecutionCase case_from_json(const nlohmann::json& j) {
  try {
    ExecutionCase c;
    c.case_id = j.at("case_id").get<std::string>();
    for (const auto& ev : j.at("inputs"))
      c.inputs.push_back({ev.at("frame").get<std::int64_t>(), ev.at("values").get<std::vector<double>>()});
    c.ablated_blocks = j.at("ablated_blocks").get<std::vector<std::string>>();
    c.replicate_count = j.at("replicate_count").get<int>();
    c.frame_budget = j.at("frame_budget").get<std::int64_t>();
    if (c.replicate_count < 1 || c.frame_budget < 0) throw Error("input", "case '" + c.case_id + "' is invalid");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error("input", std::string("malformed case: ") + e.what());
  }
}

nlohmann::json cases_to_json(const std::vector<ExecutionCase>& cases) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : cases) j.push_back(case_to_json(c));
  return j;
}

std::vector<ExecutionCase> cases_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error("input", "case list must be a JSON array");
  std::vector<ExecutionCase> cases;
  for (const auto& c : j) cases.push_back(case_from_json(c));
  return cases;
}

nlohmann::json log_to_json(const ExecutionLog& log) {
  nlohmann::json counts = nlohmann::json::object();
  for (std::size_t i = 0; i < log.block_ids.size(); ++i) counts[log.block_ids[i]] = log.block_counts[i];
  nlohmann::json j = {{"case_id", log.case_id},
                      {"block_counts", counts},
                      {"output_digest", log.output_digest},
                      {"state_digest", log.state_digest},
                      {"step_count", log.step_count},
                      {"duration_s", log.duration_s},
                      {"failed", log.failed}};
  if (log.failed) {
    j["error"] = log.error;
    j["failed_block"] = log.failed_block;
  }
  return j;
}

ExecutionLog log_from_json(const nlohmann::json& j) {
  try {
    ExecutionLog log;
    log.case_id = j.at("case_id").get<std::string>();
    for (const auto& [id, n] : j.at("block_counts").items()) {
      const auto v = n.get<std::int64_t>();
      if (v < 0) throw Error("input", "negative count for block '" + id + "'");
      log.block_ids.push_back(id);
      log.block_counts.push_back(v);
    }
    log.output_digest = j.at("output_digest").get<std::string>();
    log.state_digest = j.at("state_digest").get<std::string>();
    log.step_count = j.at("step_count").get<std::int64_t>();
    log.duration_s = j.at("duration_s").get<double>();
    log.failed = j.at("failed").get<bool>();
    if (log.failed) {
      log.error = j.value("error", "");
      log.failed_block = j.value("failed_block", "");
    }
    return log;
  } catch (const nlohmann::json::exception& e) {
    throw Error("input", std::string("malformed execution log: ") + e.what());
  }
}

std::string logs_to_jsonl(const std::vector<ExecutionLog>& logs) {
  std::string out;
  for (const auto& log : logs) out += log_to_json(log).dump() + "\n";
  return out;
}

std::vector<ExecutionLog> logs_from_jsonl(const std::string& text) {
  std::vector<ExecutionLog> logs;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("input", "log line " + std::to_string(n) + ": " + e.what());
    }
    logs.push_back(log_from_json(j));
  }
  return logs;
}

}  // namespace enerlyze
