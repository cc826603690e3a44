#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "analysis.hpp"
#include "enerlyze/lang/parser.hpp"
#include "enerlyze/optimize.hpp"

namespace enerlyze {

using json = nlohmann::json;
using lang::StmtKind;

// -- hot spots ----------------------------------------------------------------

HotBlockPolicy HotBlockPolicy::top_k(int k) {
  HotBlockPolicy p;
  p.kind = Kind::TopK;
  p.k = k;
  p.validate();
  return p;
}

HotBlockPolicy HotBlockPolicy::share_threshold(double fraction) {
  HotBlockPolicy p;
  p.kind = Kind::ShareThreshold;
  p.fraction = fraction;
  p.validate();
  return p;
}

void HotBlockPolicy::validate() const {
  if (kind == Kind::TopK && k < 1) throw Error("input", "top-k policy needs k >= 1");
  if (kind == Kind::ShareThreshold && !(fraction > 0.0 && fraction < 1.0))
    throw Error("input", "share threshold must lie strictly between 0 and 1");
}

HotBlockPolicy HotBlockPolicy::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string kind(text.substr(0, colon));
  const std::string arg = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
  try {
    std::size_t used = 0;
    if (kind == "top" && !arg.empty()) {
      const int k = std::stoi(arg, &used);
      if (used == arg.size()) return top_k(k);
    } else if (kind == "share" && !arg.empty()) {
      const double f = std::stod(arg, &used);
      if (used == arg.size()) return share_threshold(f);
    }
  } catch (const std::logic_error&) {
  }
  throw Error("input", "policy must be top:<k> or share:<fraction>, got '" + std::string(text) + "'");
}

std::string HotBlockPolicy::to_string() const {
  if (kind == Kind::TopK) return "top:" + std::to_string(k);
  char buf[64];
  std::snprintf(buf, sizeof buf, "share:%g", fraction);
  return buf;
}

namespace {

bool is_header(const std::string& id, std::string& base) {
  for (const char* suffix : {".init", ".bool", ".update"}) {
    const std::string s = suffix;
    if (id.size() > s.size() && id.compare(id.size() - s.size(), s.size(), s) == 0) {
      base = id.substr(0, id.size() - s.size());
      return true;
    }
  }
  return false;
}

void add_into(BlockProfile& to, const BlockProfile& from) {
  to.cost_J += from.cost_J;
  std::map<int, double> ops(to.op_costs.begin(), to.op_costs.end());
  for (const auto& [op, j] : from.op_costs) ops[op] += j;
  to.op_costs.assign(ops.begin(), ops.end());
}

}  // namespace

EnergyProfile fold_loop_headers(const EnergyProfile& profile) {
  EnergyProfile out;
  out.case_id = profile.case_id;
  out.total_J = profile.total_J;
  std::map<std::string, std::size_t> index;
  for (const auto& b : profile.blocks) {
    std::string base;
    if (is_header(b.id, base) && profile.find(base)) continue;
    index[b.id] = out.blocks.size();
    out.blocks.push_back(b);
  }
  for (const auto& b : profile.blocks) {
    std::string base;
    if (is_header(b.id, base) && profile.find(base)) add_into(out.blocks[index.at(base)], b);
  }
  return out;
}

std::vector<HotBlock> find_costly_blocks(const EnergyProfile& profile, const HotBlockPolicy& policy) {
  policy.validate();
  std::vector<HotBlock> all;
  for (const auto& b : profile.blocks)
    all.push_back({b.id, b.cost_J, profile.total_J > 0.0 ? b.cost_J / profile.total_J : 0.0});
  std::sort(all.begin(), all.end(), [](const HotBlock& a, const HotBlock& b) {
    return a.cost_J != b.cost_J ? a.cost_J > b.cost_J : a.id < b.id;
  });
  std::vector<HotBlock> hot;
  for (const auto& h : all) {
    if (policy.kind == HotBlockPolicy::Kind::TopK) {
      if (static_cast<int>(hot.size()) >= policy.k) break;
      hot.push_back(h);
    } else if (profile.total_J > 0.0 && h.share > policy.fraction) {
      hot.push_back(h);
    }
  }
  return hot;
}

// -- strategies -----------------------------------------------------------------

namespace {

constexpr std::pair<StrategyKind, const char*> kKindNames[] = {
    {StrategyKind::IfCombination, "IfCombination"},
    {StrategyKind::MethodInline, "MethodInline"},
    {StrategyKind::LoopInvariantMotion, "LoopInvariantMotion"},
    {StrategyKind::LoopUnroll, "LoopUnroll"},
    {StrategyKind::ConstantFoldPropagate, "ConstantFoldPropagate"},
    {StrategyKind::CommonSubexprElim, "CommonSubexprElim"},
    {StrategyKind::LibraryReplacement, "LibraryReplacement"},
    {StrategyKind::LoopUnswitching, "LoopUnswitching"},
    {StrategyKind::InductionVariableElim, "InductionVariableElim"},
};

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto at = s.find(sep, start);
    parts.emplace_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) return parts;
    start = at + 1;
  }
}

}  // namespace

const char* to_string(StrategyKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "?";
}

StrategyKind parse_strategy_kind(std::string_view s) {
  for (const auto& [kind, name] : kKindNames)
    if (s == name) return kind;
  throw Error("input", "unknown strategy '" + std::string(s) + "'");
}

std::vector<StrategyKind> all_strategy_kinds() {
  std::vector<StrategyKind> out;
  for (const auto& [kind, name] : kKindNames) out.push_back(kind);
  return out;
}

std::string Strategy::label() const {
  std::string s = to_string(kind);
  if (kind == StrategyKind::LoopUnroll && factor > 0) s += "(" + std::to_string(factor) + ")";
  return s;
}

std::string Strategy::spec() const {
  std::string s = std::string(to_string(kind)) + ":" + target;
  if (kind == StrategyKind::MethodInline && !caller.empty()) s += ":" + caller;
  if (kind == StrategyKind::LoopUnroll && factor > 0) s += ":" + std::to_string(factor);
  return s;
}

Strategy Strategy::parse(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() < 2 || parts.size() > 3 || parts[1].empty())
    throw Error("input", "strategy must be Kind:target[:caller|:factor], got '" + std::string(text) + "'");
  Strategy s;
  s.kind = parse_strategy_kind(parts[0]);
  s.target = parts[1];
  if (parts.size() == 3) {
    if (s.kind == StrategyKind::MethodInline) {
      s.caller = parts[2];
    } else if (s.kind == StrategyKind::LoopUnroll) {
      try {
        std::size_t used = 0;
        s.factor = std::stoi(parts[2], &used);
        if (used != parts[2].size() || s.factor < 0) throw std::invalid_argument("factor");
      } catch (const std::logic_error&) {
        throw Error("input", "bad unroll factor in '" + std::string(text) + "'");
      }
    } else {
      throw Error("input", std::string(to_string(s.kind)) + " takes no third field");
    }
  }
  return s;
}

bool OptimizeConfig::is_enabled(StrategyKind k) const {
  return std::find(enabled.begin(), enabled.end(), k) != enabled.end();
}

void OptimizeConfig::validate() const {
  if (inline_max_statements < 1) throw Error("input", "inline_max_statements must be at least 1");
  if (unroll_factors.empty()) throw Error("input", "unroll_factors is empty");
  for (int f : unroll_factors)
    if (f < 2) throw Error("input", "unroll factors must be at least 2");
  for (double d : {control_dominance, arithmetic_dominance})
    if (!(d >= 0.0 && d <= 1.0)) throw Error("input", "dominance thresholds must lie in [0, 1]");
  if (estimation_cases < 1) throw Error("input", "estimation_cases must be at least 1");
  if (equivalence_cases < 0) throw Error("input", "equivalence_cases must be non-negative");
  if (equivalence_frames < 1) throw Error("input", "equivalence_frames must be at least 1");
  if (jobs < 1) throw Error("input", "jobs must be at least 1");
}

json optimize_config_to_json(const OptimizeConfig& c) {
  std::vector<std::string> enabled;
  for (auto k : c.enabled) enabled.emplace_back(to_string(k));
  return {{"inline_max_statements", c.inline_max_statements},
          {"unroll_factors", c.unroll_factors},
          {"control_dominance", c.control_dominance},
          {"arithmetic_dominance", c.arithmetic_dominance},
          {"estimation_cases", c.estimation_cases},
          {"equivalence_cases", c.equivalence_cases},
          {"equivalence_frames", c.equivalence_frames},
          {"seed", c.seed},
          {"enabled", enabled},
          {"jobs", c.jobs}};
}

OptimizeConfig optimize_config_from_json(const json& j) {
  OptimizeConfig c;
  try {
    c.inline_max_statements = j.value("inline_max_statements", c.inline_max_statements);
    c.unroll_factors = j.value("unroll_factors", c.unroll_factors);
    c.control_dominance = j.value("control_dominance", c.control_dominance);
    c.arithmetic_dominance = j.value("arithmetic_dominance", c.arithmetic_dominance);
    c.estimation_cases = j.value("estimation_cases", c.estimation_cases);
    c.equivalence_cases = j.value("equivalence_cases", c.equivalence_cases);
    c.equivalence_frames = j.value("equivalence_frames", c.equivalence_frames);
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("enabled")) {
      c.enabled.clear();
      for (const auto& s : j.at("enabled")) c.enabled.push_back(parse_strategy_kind(s.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw Error("input", std::string("bad optimize config: ") + e.what());
  }
  c.validate();
  return c;
}

// -- equivalence ----------------------------------------------------------------

std::vector<ExecutionCase> equivalence_corpus(const lang::CheckedProgram& cp, int n, std::uint64_t seed,
                                              std::int64_t frames) {
  if (n <= 0) return {};
  const BlockMap bm = divide_blocks(cp);
  CaseDesign d;
  d.n_cases = std::max(n, 2);
  d.seed = seed;
  d.policy = AblationPolicy::RandomK;
  d.k = 1 << 20;  // ablations are discarded; this only avoids the coverage check
  d.frame_budget = frames;
  d.replicate_count = 1;
  auto cases = generate_cases(cp, bm, d);
  cases.resize(static_cast<std::size_t>(n));
  for (auto& c : cases) c.ablated_blocks.clear();
  return cases;
}

namespace {

std::vector<ExecutionCase> unablated(std::vector<ExecutionCase> cases) {
  for (auto& c : cases) {
    c.ablated_blocks.clear();
    c.replicate_count = 1;
  }
  return cases;
}

EquivalenceVerdict compare_logs(const std::vector<ExecutionLog>& before, const lang::CheckedProgram& refactored,
                                const std::vector<ExecutionCase>& cases, int jobs) {
  const auto after = run_all(refactored, divide_blocks(refactored), cases, {}, jobs);
  EquivalenceVerdict v;
  v.cases = static_cast<int>(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& a = before[i];
    const auto& b = after[i];
    std::string why;
    if (a.failed) {
      why = "original failed: " + a.error;
    } else if (b.failed) {
      why = "refactored failed in " + b.failed_block + ": " + b.error;
    } else if (a.output_digest != b.output_digest) {
      why = "output differs";
    } else if (a.state_digest != b.state_digest) {
      why = "final state differs";
    }
    if (!why.empty()) {
      v.pass = false;
      v.diverging_case = cases[i].case_id;
      v.detail = why;
      return v;
    }
  }
  v.pass = true;
  return v;
}

}  // namespace

EquivalenceVerdict check_equivalence(const lang::CheckedProgram& original, const lang::CheckedProgram& refactored,
                                     const std::vector<ExecutionCase>& cases, int jobs) {
  const auto plain = unablated(cases);
  const auto before = run_all(original, divide_blocks(original), plain, {}, jobs);
  return compare_logs(before, refactored, plain, jobs);
}

// -- modeled evaluation -----------------------------------------------------------

CostBasis cost_basis(const EnergyModel& model, const CostTable& fallback) {
  const auto universe = op_universe();
  if (model.cost_uJ.size() != universe.size() || fallback.cost_uJ.size() != universe.size())
    throw Error("input", "cost vectors do not cover the operation universe");
  CostBasis b;
  b.cost_uJ.resize(universe.size());
  for (std::size_t j = 0; j < universe.size(); ++j) {
    const bool seen = model.columns.observed.empty() || model.observed(static_cast<int>(j));
    b.cost_uJ[j] = seen ? model.cost_uJ[j] : fallback.cost_uJ[j];
    if (!seen) b.fallback_ops.push_back(universe[j].name);
  }
  return b;
}

ModeledRun modeled_run(const lang::CheckedProgram& cp, const std::vector<ExecutionCase>& cases,
                       const CostBasis& basis, int jobs) {
  const BlockMap bm = divide_blocks(cp);
  const OperationDictionary dict = build_dictionary(cp, bm);
  EnergyModel m;
  m.cost_uJ = basis.cost_uJ;
  m.accepted = true;
  const auto plain = unablated(cases);
  const auto logs = run_all(cp, bm, plain, {}, jobs);
  ModeledRun r;
  r.op_counts.assign(op_universe().size(), 0);
  r.profile.case_id = "all";
  for (const auto& log : logs) {
    if (log.failed) throw Error("runtime", "case " + log.case_id + " failed in " + log.failed_block + ": " + log.error);
    const auto p = block_profiles(log, dict, m);
    if (r.profile.blocks.empty()) {
      r.profile.blocks = p.blocks;
    } else {
      for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        r.profile.blocks[i].executions += p.blocks[i].executions;
        add_into(r.profile.blocks[i], p.blocks[i]);
      }
    }
    r.profile.total_J += p.total_J;
    const auto n = total_op_counts(log.block_ids, log.block_counts, dict);
    for (std::size_t j = 0; j < n.size(); ++j) r.op_counts[j] += n[j];
  }
  r.energy_J = r.profile.total_J;
  return r;
}

// -- strategy selection -------------------------------------------------------------

namespace {

Strategy make(StrategyKind k, std::string target, int factor = 0) {
  Strategy s;
  s.kind = k;
  s.target = std::move(target);
  s.factor = factor;
  return s;
}

double group_share(const BlockProfile& b, const char* group) {
  if (b.cost_J <= 0.0) return 0.0;
  const auto g = b.grouped();
  const auto it = g.find(group);
  return it == g.end() ? 0.0 : it->second / b.cost_J;
}

void add_unique(std::vector<Strategy>& v, const Strategy& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

std::vector<Strategy> rule_candidates(const lang::CheckedProgram& cp, const HotBlock& block,
                                      const EnergyProfile& profile, const OptimizeConfig& cfg,
                                      const std::vector<double>& cost_uJ, std::map<std::string, std::string>& rules) {
  std::vector<Strategy> out;
  const BlockMap bm = divide_blocks(cp);
  const auto bi = bm.find(block.id);
  const BlockProfile* bp = profile.find(block.id);
  if (!bi || !bp) return out;
  const Block& b = bm.blocks[static_cast<std::size_t>(*bi)];
  const std::string method = cp.method(b.method).name;
  const lang::Program& p = cp.program();
  const opt::EffectAnalysis fx(p);

  std::map<int, int> loop_of_body;  // body block -> loop statement
  for (int sid = 0; sid < cp.stmt_count(); ++sid)
    if (bm.body_block[static_cast<std::size_t>(sid)] >= 0) loop_of_body[bm.body_block[static_cast<std::size_t>(sid)]] = sid;
  auto body_id = [&](int sid) { return bm.blocks[static_cast<std::size_t>(bm.body_block[static_cast<std::size_t>(sid)])].id; };

  auto propose = [&](Strategy s, const std::string& rule) {
    if (!cfg.is_enabled(s.kind)) return;
    add_unique(out, s);
    rules.emplace(s.spec(), rule);
  };

  // Loop unrolling when the block is Control-dominant inside a for loop.
  if (group_share(*bp, "Control") > cfg.control_dominance) {
    for (int at = *bi; at >= 0; at = bm.blocks[static_cast<std::size_t>(at)].parent) {
      const auto it = loop_of_body.find(at);
      if (it != loop_of_body.end() && cp.stmt(it->second).kind == StmtKind::For) {
        std::vector<int> factors = cfg.unroll_factors;
        std::sort(factors.rbegin(), factors.rend());
        for (int f : factors) {
          const Strategy s = make(StrategyKind::LoopUnroll, body_id(it->second), f);
          if (apply_strategy(cp, s, cfg, cost_uJ).applied) {
            propose(s, "Control share above threshold inside a for loop");
            break;
          }
        }
        break;
      }
    }
  }

  if (apply_if_combination(cp, method).applied)
    propose(make(StrategyKind::IfCombination, method), "repeated if predicate in the method");

  // Small callees invoked from the block, or the block being a small method.
  std::vector<int> own_loops;
  if (auto it = loop_of_body.find(*bi); it != loop_of_body.end()) own_loops.push_back(it->second);
  for (int sid : b.stmts) {
    const lang::Stmt& s = cp.stmt(sid);
    if (s.kind == StmtKind::For || s.kind == StmtKind::While) own_loops.push_back(sid);
    for (const auto& e : s.exprs)
      opt::for_each_expr(e, [&](const lang::Expr& x) {
        if (x.kind != lang::ExprKind::Call || x.method < 0 || x.method == b.method) return;
        const auto& callee = cp.method(x.method);
        if (!fx.recursive(x.method) && opt::count_statements(callee.body) <= cfg.inline_max_statements)
          propose(make(StrategyKind::MethodInline, callee.name), "small callee invoked from the block");
      });
  }
  if (block.id == method + "()" && !fx.recursive(b.method) &&
      opt::count_statements(cp.method(b.method).body) <= cfg.inline_max_statements)
    propose(make(StrategyKind::MethodInline, method), "block is a small method");

  for (int sid : own_loops) {
    propose(make(StrategyKind::LoopInvariantMotion, body_id(sid)), "loop of the block");
    propose(make(StrategyKind::LibraryReplacement, body_id(sid)), "loop of the block");
  }

  if (group_share(*bp, "Arithmetic") > cfg.arithmetic_dominance) {
    propose(make(StrategyKind::ConstantFoldPropagate, method), "Arithmetic share above threshold");
    propose(make(StrategyKind::CommonSubexprElim, method), "Arithmetic share above threshold");
  }
  return out;
}

std::vector<ExecutionCase> first_cases(const std::vector<ExecutionCase>& cases, int n) {
  return {cases.begin(), cases.begin() + std::min<std::ptrdiff_t>(n, static_cast<std::ptrdiff_t>(cases.size()))};
}

}  // namespace

std::vector<CandidateStrategy> select_strategies(const lang::CheckedProgram& cp, const HotBlock& block,
                                                 const EnergyProfile& profile, const CostBasis& basis,
                                                 const std::vector<ExecutionCase>& estimation_cases,
                                                 const OptimizeConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::string> rules;
  const auto proposals = rule_candidates(cp, block, profile, cfg, basis.cost_uJ, rules);
  const auto est = first_cases(estimation_cases, cfg.estimation_cases);
  const double base = modeled_run(cp, est, basis, cfg.jobs).energy_J;
  std::vector<CandidateStrategy> out;
  for (const auto& s : proposals) {
    const auto r = apply_strategy(cp, s, cfg, basis.cost_uJ);
    if (!r.applied) continue;
    double after = 0.0;
    try {
      after = modeled_run(opt::recheck(r.program), est, basis, cfg.jobs).energy_J;
    } catch (const Error& e) {
      if (e.kind() != "runtime") throw;
      continue;  // the refactoring breaks a run; the differential check would reject it too
    }
    const double saving = base - after;
    if (saving <= 0.0) continue;
    out.push_back({s, rules.at(s.spec()), saving, base > 0.0 ? 100.0 * saving / base : 0.0});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const CandidateStrategy& a, const CandidateStrategy& b) { return a.saving_J > b.saving_J; });
  return out;
}

// -- optimization -----------------------------------------------------------------

namespace {

struct Driver {
  const lang::CheckedProgram& original;
  const OptimizeConfig& cfg;
  CostBasis basis;
  std::vector<ExecutionCase> cases;
  std::vector<ExecutionCase> eq_cases;
  std::vector<ExecutionLog> eq_before;
  lang::CheckedProgram current;
  ModeledRun current_run;
  double original_J = 0.0;

  Driver(const lang::CheckedProgram& cp, const EnergyModel& model, const std::vector<ExecutionCase>& input,
         const OptimizeConfig& c, const CostTable& fallback)
      : original(cp), cfg(c), basis(cost_basis(model, fallback)), cases(unablated(input)), current(cp) {
    cfg.validate();
    if (cases.empty()) throw Error("input", "no execution cases");
    eq_cases = cases;
    for (auto& e : equivalence_corpus(cp, cfg.equivalence_cases, cfg.seed, cfg.equivalence_frames)) {
      e.case_id = "equivalence_" + e.case_id.substr(e.case_id.find('_') + 1);
      eq_cases.push_back(std::move(e));
    }
    eq_before = run_all(cp, divide_blocks(cp), eq_cases, {}, cfg.jobs);
    current_run = modeled_run(cp, cases, basis, cfg.jobs);
    original_J = current_run.energy_J;
  }

  // Applies `s` to the current program; keeps it when `accept` says so.
  StepReport step(const Strategy& s, const std::string& hot_block, bool require_saving) {
    StepReport rep;
    rep.strategy = s;
    rep.hot_block = hot_block;
    rep.energy_before_J = current_run.energy_J;
    rep.energy_after_J = current_run.energy_J;
    rep.cumulative_saving_pct = pct(original_J, current_run.energy_J);
    const auto r = apply_strategy(current, s, cfg, basis.cost_uJ);
    if (!r.applied) {
      rep.reason = "not applicable: " + r.reason;
      return rep;
    }
    rep.description = r.description;
    const auto next = opt::recheck(r.program);
    rep.verdict = compare_logs(eq_before, next, eq_cases, cfg.jobs);
    if (!rep.verdict.pass) {
      rep.reason = "differential check failed on " + rep.verdict.diverging_case + ": " + rep.verdict.detail;
      return rep;
    }
    const auto run = modeled_run(next, cases, basis, cfg.jobs);
    rep.energy_after_J = run.energy_J;
    rep.saving_pct = pct(current_run.energy_J, run.energy_J);
    for (std::size_t j = 0; j < run.op_counts.size(); ++j) {
      const auto d = run.op_counts[j] - current_run.op_counts[j];
      if (d != 0) rep.op_deltas[op_universe()[j].name] = d;
    }
    if (require_saving && !(run.energy_J < current_run.energy_J)) {
      rep.reason = "modeled energy did not decrease";
      rep.energy_after_J = current_run.energy_J;
      rep.op_deltas.clear();
      rep.saving_pct = 0.0;
      return rep;
    }
    rep.applied = true;
    current = next;
    current_run = run;
    rep.cumulative_saving_pct = pct(original_J, run.energy_J);
    return rep;
  }

  static double pct(double before, double after) { return before > 0.0 ? 100.0 * (before - after) / before : 0.0; }

  void finish(OptimizationReport& r) const {
    r.corpus_cases = static_cast<int>(cases.size());
    r.equivalence_cases = static_cast<int>(eq_cases.size());
    r.original_J = original_J;
    r.final_J = current_run.energy_J;
    r.total_saving_pct = pct(original_J, current_run.energy_J);
    r.fallback_ops = basis.fallback_ops;
    r.refactored_source = lang::pretty_print(current.program());
  }
};

}  // namespace

OptimizationReport optimize(const lang::CheckedProgram& cp, const EnergyModel& model,
                            const std::vector<ExecutionCase>& cases, const HotBlockPolicy& policy,
                            const OptimizeConfig& cfg, const CostTable& fallback) {
  policy.validate();
  Driver d(cp, model, cases, cfg, fallback);
  OptimizationReport r;
  r.policy = policy;
  const auto& profile = d.current_run.profile;
  r.hot_blocks = find_costly_blocks(policy.fold_loop_headers ? fold_loop_headers(profile) : profile, policy);
  for (const auto& hot : r.hot_blocks) {
    // Candidates come from the program as refactored so far; a block an
    // earlier step removed has none.
    const auto& now = d.current_run.profile;
    const auto candidates = select_strategies(d.current, hot, policy.fold_loop_headers ? fold_loop_headers(now) : now,
                                              d.basis, d.cases, cfg);
    r.candidates.push_back({hot, candidates});
    for (const auto& c : candidates) r.steps.push_back(d.step(c.strategy, hot.id, true));
  }
  d.finish(r);
  return r;
}

OptimizationReport evaluate(const lang::CheckedProgram& cp, const std::vector<Strategy>& plan,
                            const EnergyModel& model, const std::vector<ExecutionCase>& cases,
                            const OptimizeConfig& cfg, const CostTable& fallback) {
  Driver d(cp, model, cases, cfg, fallback);
  OptimizationReport r;
  for (const auto& s : plan) r.steps.push_back(d.step(s, "", false));
  d.finish(r);
  return r;
}

// -- reports ------------------------------------------------------------------------

namespace {

json verdict_json(const EquivalenceVerdict& v) {
  json j = {{"pass", v.pass}, {"cases", v.cases}};
  if (!v.diverging_case.empty()) j["diverging_case"] = v.diverging_case;
  if (!v.detail.empty()) j["detail"] = v.detail;
  return j;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

json report_to_json(const OptimizationReport& r) {
  json hot = json::array();
  for (const auto& h : r.hot_blocks) hot.push_back({{"id", h.id}, {"cost_J", h.cost_J}, {"share", h.share}});
  json cands = json::array();
  for (const auto& hc : r.candidates) {
    json list = json::array();
    for (const auto& c : hc.candidates)
      list.push_back({{"strategy", c.strategy.spec()},
                      {"label", c.strategy.label()},
                      {"rule", c.rule},
                      {"saving_J", c.saving_J},
                      {"saving_pct", c.saving_pct}});
    cands.push_back({{"block", hc.block.id}, {"candidates", list}});
  }
  json steps = json::array();
  for (const auto& s : r.steps) {
    json j = {{"strategy", s.strategy.spec()},
              {"label", s.strategy.label()},
              {"hot_block", s.hot_block},
              {"applied", s.applied},
              {"energy_before_J", s.energy_before_J},
              {"energy_after_J", s.energy_after_J},
              {"saving_pct", s.saving_pct},
              {"cumulative_saving_pct", s.cumulative_saving_pct},
              {"op_deltas", s.op_deltas}};
    if (!s.reason.empty()) j["reason"] = s.reason;
    if (!s.description.empty()) j["description"] = s.description;
    if (s.verdict.cases > 0) j["verdict"] = verdict_json(s.verdict);
    steps.push_back(std::move(j));
  }
  json j = {{"program", r.program},
            {"corpus_cases", r.corpus_cases},
            {"equivalence_cases", r.equivalence_cases},
            {"hot_blocks", hot},
            {"candidates", cands},
            {"steps", steps},
            {"original_J", r.original_J},
            {"final_J", r.final_J},
            {"total_saving_pct", r.total_saving_pct},
            {"fallback_ops", r.fallback_ops}};
  if (!r.hot_blocks.empty() || !r.candidates.empty()) j["policy"] = r.policy.to_string();
  return j;
}

std::string report_markdown(const OptimizationReport& r) {
  std::string md = "# Optimization report";
  if (!r.program.empty()) md += ": " + r.program;
  md += "\n\n";
  md += "Modeled energy over " + std::to_string(r.corpus_cases) + " case(s): " + fmt("%.6g", r.original_J) +
        " J before, " + fmt("%.6g", r.final_J) + " J after, saving " + format_percent(r.total_saving_pct) + ".\n";
  md += "Differential check: " + std::to_string(r.equivalence_cases) + " case(s) per step.\n";
  if (!r.fallback_ops.empty()) {
    md += "Operations costed from the default table (not observed in training):";
    for (const auto& op : r.fallback_ops) md += " " + op;
    md += "\n";
  }
  if (!r.hot_blocks.empty()) {
    md += "\n## Hot blocks (" + r.policy.to_string() + ")\n\n| Block | Cost (J) | Share |\n|---|---:|---:|\n";
    for (const auto& h : r.hot_blocks)
      md += "| " + h.id + " | " + fmt("%.6g", h.cost_J) + " | " + format_percent(100.0 * h.share) + " |\n";
  }
  for (const auto& hc : r.candidates) {
    md += "\n## Candidates for " + hc.block.id + "\n\n";
    if (hc.candidates.empty()) {
      md += "None with a positive modeled saving.\n";
      continue;
    }
    md += "| Strategy | Target | Rule | Estimated saving |\n|---|---|---|---:|\n";
    for (const auto& c : hc.candidates)
      md += "| " + c.strategy.label() + " | " + c.strategy.target + " | " + c.rule + " | " +
            format_percent(c.saving_pct) + " |\n";
  }
  md += "\n## Steps\n\n";
  if (r.steps.empty()) md += "No steps.\n";
  for (const auto& s : r.steps) {
    md += "- **" + s.strategy.label() + "** on `" + s.strategy.target + "`";
    if (!s.strategy.caller.empty()) md += " into `" + s.strategy.caller + "`";
    if (s.applied) {
      md += ": applied, " + s.description + ". Equivalence PASS on " + std::to_string(s.verdict.cases) +
            " cases. Energy " + fmt("%.6g", s.energy_before_J) + " J -> " + fmt("%.6g", s.energy_after_J) + " J (" +
            format_percent(s.saving_pct) + ", cumulative " + format_percent(s.cumulative_saving_pct) + ").\n";
    } else {
      md += ": skipped, " + s.reason + ".\n";
    }
  }
  return md;
}

}  // namespace enerlyze
