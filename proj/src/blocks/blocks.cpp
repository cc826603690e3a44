#include "enerlyze/blocks.hpp"

#include <algorithm>
#include <functional>

#include <nlohmann/json.hpp>

namespace enerlyze {

const char* to_string(BlockKind k) {
  switch (k) {
    case BlockKind::Entry: return "entry";
    case BlockKind::IfBody: return "if-body";
    case BlockKind::ElseBody: return "else-body";
    case BlockKind::ForInit: return "for-init";
    case BlockKind::ForBoolean: return "for-boolean";
    case BlockKind::ForUpdate: return "for-update";
    case BlockKind::LoopBody: return "loop-body";
    case BlockKind::WhileHeader: return "while-header";
    case BlockKind::SwitchArm: return "switch-arm";
    case BlockKind::Continuation: return "continuation";
  }
  return "?";
}

const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Branch: return "branch";
    case EdgeKind::Seq: return "seq";
    case EdgeKind::Back: return "back";
  }
  return "?";
}

std::optional<int> BlockMap::find(std::string_view id) const {
  if (auto it = by_id_.find(std::string(id)); it != by_id_.end()) return it->second;
  return std::nullopt;
}

int BlockMap::index_of(std::string_view id) const {
  if (auto i = find(id)) return *i;
  throw Error("input", "unknown block id '" + std::string(id) + "'");
}

std::vector<std::string> BlockMap::ids() const {
  std::vector<std::string> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(b.id);
  return out;
}

void BlockMap::reindex() {
  by_id_.clear();
  for (int i = 0; i < size(); ++i)
    if (!by_id_.emplace(blocks[static_cast<std::size_t>(i)].id, i).second)
      throw Error("internal", "duplicate block id " + blocks[static_cast<std::size_t>(i)].id);
}

std::vector<int> BlockMap::ablatable() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (blocks[static_cast<std::size_t>(i)].ablatable) out.push_back(i);
  return out;
}

namespace {

using lang::Stmt;
using lang::StmtKind;

bool contains_return(const std::vector<Stmt>& body);

bool contains_return(const Stmt& s) {
  switch (s.kind) {
    case StmtKind::Return: return true;
    case StmtKind::If: return contains_return(s.body) || contains_return(s.else_body);
    case StmtKind::For:
    case StmtKind::While: return contains_return(s.body);
    case StmtKind::Switch:
      for (const auto& a : s.arms)
        if (contains_return(a.body)) return true;
      return false;
    default: return false;
  }
}

bool contains_return(const std::vector<Stmt>& body) {
  for (const auto& s : body)
    if (contains_return(s)) return true;
  return false;
}

// A break inside `s` whose target loop or switch lies outside `s`.
bool escaping_break(const Stmt& s) {
  if (s.kind == StmtKind::Break) return true;
  if (s.kind != StmtKind::If) return false;
  for (const auto* list : {&s.body, &s.else_body})
    for (const auto& x : *list)
      if (escaping_break(x)) return true;
  return false;
}

class Divider {
 public:
  Divider(const lang::CheckedProgram& cp, BlockMap& bm) : cp_(cp), bm_(bm) {}

  void run() {
    const auto n = static_cast<std::size_t>(cp_.stmt_count());
    for (auto* v : {&bm_.stmt_block, &bm_.cont_block, &bm_.then_block, &bm_.else_block, &bm_.init_block,
                    &bm_.cond_block, &bm_.update_block, &bm_.body_block})
      v->assign(n, -1);
    bm_.arm_blocks.assign(n, {});
    for (int m = 0; m < cp_.method_count(); ++m) {
      method_ = m;
      const auto& md = cp_.method(m);
      const std::string name = md.name + "()";
      const int entry = add(name, BlockKind::Entry, -1, false, md.pos);
      bm_.method_entry.push_back(entry);
      list(md.body, entry, name);
    }
    bm_.reindex();
  }

 private:
  int add(const std::string& id, BlockKind kind, int parent, bool ablatable, SourcePos pos) {
    Block b;
    b.id = id;
    b.kind = kind;
    b.method = method_;
    b.parent = parent;
    b.ablatable = ablatable;
    b.pos = pos;
    const int index = static_cast<int>(bm_.blocks.size());
    bm_.blocks.push_back(std::move(b));
    return index;
  }

  void edge(int from, int to, EdgeKind k) { bm_.edges.push_back({from, to, k}); }

  void own(const Stmt& s, int block) {
    bm_.stmt_block[static_cast<std::size_t>(s.id)] = block;
    bm_.blocks[static_cast<std::size_t>(block)].stmts.push_back(s.id);
  }

  void list(const std::vector<Stmt>& body, int head, const std::string& prefix) {
    int current = head;
    int n_if = 0, n_for = 0, n_while = 0, n_switch = 0, n_cont = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
      const Stmt& s = body[i];
      const auto sid = static_cast<std::size_t>(s.id);
      own(s, current);
      switch (s.kind) {
        case StmtKind::If: {
          const std::string name = prefix + ".if_" + std::to_string(++n_if);
          const int then_b = add(name, BlockKind::IfBody, current, true, s.pos);
          bm_.then_block[sid] = then_b;
          edge(current, then_b, EdgeKind::Branch);
          list(s.body, then_b, name);
          if (s.has_else) {
            const int else_b = add(name + ".else", BlockKind::ElseBody, current, true, s.pos);
            bm_.else_block[sid] = else_b;
            edge(current, else_b, EdgeKind::Branch);
            list(s.else_body, else_b, name + ".else");
          }
          break;
        }
        case StmtKind::For: {
          const std::string name = prefix + ".for_" + std::to_string(++n_for);
          const int init = add(name + ".init", BlockKind::ForInit, current, false, s.pos);
          const int cond = add(name + ".bool", BlockKind::ForBoolean, current, false, s.pos);
          const int update = add(name + ".update", BlockKind::ForUpdate, current, false, s.pos);
          // Skipping a body is only safe when the loop still makes progress.
          const int body_b = add(name, BlockKind::LoopBody, current, !s.update.empty(), s.pos);
          bm_.init_block[sid] = init;
          bm_.cond_block[sid] = cond;
          bm_.update_block[sid] = update;
          bm_.body_block[sid] = body_b;
          edge(current, init, EdgeKind::Seq);
          edge(init, cond, EdgeKind::Seq);
          edge(cond, body_b, EdgeKind::Branch);
          edge(body_b, update, EdgeKind::Seq);
          edge(update, cond, EdgeKind::Back);
          for (const auto& x : s.init) own(x, init);
          for (const auto& x : s.update) own(x, update);
          list(s.body, body_b, name);
          break;
        }
        case StmtKind::While: {
          const std::string name = prefix + ".while_" + std::to_string(++n_while);
          const int header = add(name + ".header", BlockKind::WhileHeader, current, false, s.pos);
          const int body_b = add(name, BlockKind::LoopBody, current, false, s.pos);
          bm_.cond_block[sid] = header;
          bm_.body_block[sid] = body_b;
          edge(current, header, EdgeKind::Seq);
          edge(header, body_b, EdgeKind::Branch);
          edge(body_b, header, EdgeKind::Back);
          list(s.body, body_b, name);
          break;
        }
        case StmtKind::Switch: {
          const std::string name = prefix + ".switch_" + std::to_string(++n_switch);
          for (const auto& arm : s.arms) {
            const std::string arm_name =
                name + (arm.is_default ? std::string(".default") : ".case_" + std::to_string(arm.value));
            const int b = add(arm_name, BlockKind::SwitchArm, current, true, arm.pos);
            bm_.arm_blocks[sid].push_back(b);
            edge(current, b, EdgeKind::Branch);
            list(arm.body, b, arm_name);
          }
          break;
        }
        default: break;
      }
      if (i + 1 < body.size() && (contains_return(s) || escaping_break(s))) {
        const int cont = add(prefix + ".cont_" + std::to_string(++n_cont), BlockKind::Continuation, head, false,
                             body[i + 1].pos);
        bm_.cont_block[static_cast<std::size_t>(body[i + 1].id)] = cont;
        edge(current, cont, EdgeKind::Seq);
        current = cont;
      }
    }
  }

  const lang::CheckedProgram& cp_;
  BlockMap& bm_;
  int method_ = -1;
};

OpCountVector& row_of(OperationDictionary& d, int block) { return d.counts[static_cast<std::size_t>(block)]; }

void bump(OpCountVector& row, int op) { ++row[static_cast<std::size_t>(op)]; }

}  // namespace

BlockMap divide_blocks(const lang::CheckedProgram& program) {
  BlockMap bm;
  Divider(program, bm).run();
  return bm;
}

std::optional<int> OperationDictionary::find(std::string_view id) const {
  for (std::size_t i = 0; i < block_ids.size(); ++i)
    if (block_ids[i] == id) return static_cast<int>(i);
  return std::nullopt;
}

OperationDictionary build_dictionary(const lang::CheckedProgram& program, const BlockMap& blocks) {
  OperationDictionary d;
  d.block_ids = blocks.ids();
  d.counts.assign(blocks.blocks.size(), OpCountVector(op_universe().size(), 0));
  // Parameter ops are counted at the call site, per argument.
  std::function<void(const lang::Expr&, OpCountVector&)> visit = [&](const lang::Expr& e, OpCountVector& row) {
    const int op = ops::of_expr(e);
    if (op >= 0) bump(row, op);
    if (e.kind == lang::ExprKind::Call && e.method >= 0)
      for (const auto& prm : program.method(e.method).params) bump(row, ops::parameter(prm.type));
    for (const auto& c : e.operands) visit(c, row);
  };
  for (int id = 0; id < program.stmt_count(); ++id) {
    const Stmt& s = program.stmt(id);
    const auto sid = static_cast<std::size_t>(id);
    OpCountVector& row = row_of(d, blocks.stmt_block[sid]);
    switch (s.kind) {
      case StmtKind::VarDecl:
        bump(row, ops::of_declaration(s));
        if (!s.exprs.empty()) {
          bump(row, ops::of_assign(s.decl_type, s.exprs[0].type));
          visit(s.exprs[0], row);
        }
        break;
      case StmtKind::Assign:
        bump(row, ops::of_assign(s.exprs[0].type, s.exprs[1].type));
        visit(s.exprs[0], row);
        visit(s.exprs[1], row);
        break;
      case StmtKind::IncDec:
        bump(row, s.increment ? ops::increment() : ops::decrement());
        visit(s.exprs[0], row);
        break;
      case StmtKind::If:
        bump(row, ops::block_goto_if());
        visit(s.exprs[0], row);
        break;
      case StmtKind::For:
        visit(s.exprs[0], row_of(d, blocks.cond_block[sid]));
        bump(row_of(d, blocks.body_block[sid]), ops::block_goto_for());
        break;
      case StmtKind::While:
        visit(s.exprs[0], row_of(d, blocks.cond_block[sid]));
        bump(row_of(d, blocks.body_block[sid]), ops::block_goto_while());
        break;
      case StmtKind::Switch:
        bump(row, ops::block_goto_switch());
        visit(s.exprs[0], row);
        break;
      case StmtKind::Call:
        visit(s.exprs[0], row);
        break;
      case StmtKind::Return:
        bump(row, ops::of_return(program.method(program.stmt_method(id)).return_type));
        if (!s.exprs.empty()) visit(s.exprs[0], row);
        break;
      case StmtKind::Break:
        break;
    }
  }
  return d;
}

OpCountVector total_op_counts(std::span<const std::string> block_ids, std::span<const std::int64_t> block_counts,
                              const OperationDictionary& dict) {
  if (block_ids.size() != block_counts.size()) throw Error("input", "block ids and counts differ in length");
  OpCountVector total(op_universe().size(), 0);
  const bool aligned = block_ids.size() == dict.block_ids.size() &&
                       std::equal(block_ids.begin(), block_ids.end(), dict.block_ids.begin());
  for (std::size_t i = 0; i < block_ids.size(); ++i) {
    std::size_t row = i;
    if (!aligned) {
      const auto found = dict.find(block_ids[i]);
      if (!found) throw Error("input", "block id '" + block_ids[i] + "' is not in the dictionary");
      row = static_cast<std::size_t>(*found);
    }
    const std::int64_t b = block_counts[i];
    if (b == 0) continue;
    const auto& o = dict.counts[row];
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += b * o[j];
  }
  return total;
}

nlohmann::json op_counts_to_json(const OpCountVector& counts) {
  nlohmann::json j = nlohmann::json::object();
  const auto u = op_universe();
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] != 0) j[u[k].name] = counts[k];
  return j;
}

OpCountVector op_counts_from_json(const nlohmann::json& j) {
  OpCountVector v(op_universe().size(), 0);
  for (const auto& [name, count] : j.items()) {
    const auto id = find_op(name);
    if (!id) throw Error("schema", "unknown operation '" + name + "'");
    v[static_cast<std::size_t>(*id)] = count.get<std::int64_t>();
  }
  return v;
}

nlohmann::json dictionary_to_json(const OperationDictionary& dict) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < dict.block_ids.size(); ++i) j[dict.block_ids[i]] = op_counts_to_json(dict.counts[i]);
  return j;
}

OperationDictionary dictionary_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("schema", "dictionary must be a JSON object");
  OperationDictionary d;
  for (const auto& [id, counts] : j.items()) {
    d.block_ids.push_back(id);
    d.counts.push_back(op_counts_from_json(counts));
  }
  return d;
}

std::string dictionary_to_csv(const OperationDictionary& dict) {
  std::string out = "block_id";
  for (const auto& op : op_universe()) out += "," + op.name;
  out += '\n';
  for (std::size_t i = 0; i < dict.block_ids.size(); ++i) {
    out += dict.block_ids[i];
    for (auto c : dict.counts[i]) out += "," + std::to_string(c);
    out += '\n';
  }
  return out;
}

nlohmann::json blockmap_to_json(const BlockMap& bm) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : bm.blocks) {
    blocks.push_back({{"id", b.id},
                      {"kind", to_string(b.kind)},
                      {"parent", b.parent >= 0 ? nlohmann::json(bm.blocks[static_cast<std::size_t>(b.parent)].id)
                                               : nlohmann::json(nullptr)},
                      {"ablatable", b.ablatable},
                      {"statements", b.stmts},
                      {"span", {{"line", b.pos.line}, {"column", b.pos.column}}}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : bm.edges)
    edges.push_back({{"from", bm.blocks[static_cast<std::size_t>(e.from)].id},
                     {"to", bm.blocks[static_cast<std::size_t>(e.to)].id},
                     {"kind", to_string(e.kind)}});
  return {{"blocks", std::move(blocks)}, {"edges", std::move(edges)}};
}

}  // namespace enerlyze
