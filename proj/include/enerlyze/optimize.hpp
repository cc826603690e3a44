#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "enerlyze/accounting.hpp"
#include "enerlyze/device_sim.hpp"
#include "enerlyze/interp.hpp"

namespace enerlyze {

// Hot-spot identification.

struct HotBlockPolicy {
  enum class Kind { TopK, ShareThreshold };
  Kind kind = Kind::ShareThreshold;
  int k = 10;
  double fraction = 0.10;
  /// Attribute loop header blocks (.init, .bool, .update) to their loop body
  /// block, so a loop is one candidate with its overhead included.
  bool fold_loop_headers = true;

  static HotBlockPolicy top_k(int k);
  static HotBlockPolicy share_threshold(double fraction = 0.10);
  void validate() const;
  /// "top:10" or "share:0.10".
  static HotBlockPolicy parse(std::string_view text);
  std::string to_string() const;
};

struct HotBlock {
  std::string id;
  double cost_J = 0.0;
  double share = 0.0;  // fraction of the profile total
};

/// Merges X.init, X.bool and X.update into X (executions stay those of X).
EnergyProfile fold_loop_headers(const EnergyProfile& profile);

/// top_k: the k costliest blocks; share_threshold: every block with
/// cost/total > fraction. Descending cost, ties by id.
std::vector<HotBlock> find_costly_blocks(const EnergyProfile& profile, const HotBlockPolicy& policy);

// Strategies.

enum class StrategyKind {
  IfCombination,
  MethodInline,
  LoopInvariantMotion,
  LoopUnroll,
  ConstantFoldPropagate,
  CommonSubexprElim,
  LibraryReplacement,
  LoopUnswitching,
  InductionVariableElim,
};

const char* to_string(StrategyKind k);
StrategyKind parse_strategy_kind(std::string_view s);
/// Every kind, in declaration order.
std::vector<StrategyKind> all_strategy_kinds();

/// A strategy bound to its target. `target` is a method name (IfCombination,
/// ConstantFoldPropagate, CommonSubexprElim), a callee name (MethodInline,
/// with `caller` empty for every caller) or the body block id of a loop.
struct Strategy {
  StrategyKind kind = StrategyKind::IfCombination;
  std::string target;
  std::string caller;
  int factor = 0;  // LoopUnroll; 0 picks the largest allowed factor
  std::string pattern = "buffer_copy";  // LibraryReplacement

  /// "LoopUnroll(8)", "MethodInline", ...
  std::string label() const;
  /// Parseable form: Kind:target[:caller|:factor], e.g.
  /// "LoopUnroll:blit().for_1:8", "MethodInline:transform:visit".
  std::string spec() const;
  static Strategy parse(std::string_view spec);

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

struct OptimizeConfig {
  int inline_max_statements = 30;
  std::vector<int> unroll_factors = {2, 4, 8};
  /// Control share of a hot block above which loop unrolling is proposed.
  double control_dominance = 1.0 / 3.0;
  /// Arithmetic share above which folding and CSE are proposed.
  double arithmetic_dominance = 1.0 / 3.0;
  /// Cases used to estimate a candidate's saving (first N of the corpus).
  int estimation_cases = 8;
  /// Fresh seeded cases for the differential check, on top of the corpus.
  int equivalence_cases = 100;
  std::int64_t equivalence_frames = 60;
  std::uint64_t seed = 42;
  std::vector<StrategyKind> enabled = {StrategyKind::IfCombination,      StrategyKind::MethodInline,
                                       StrategyKind::LoopInvariantMotion, StrategyKind::LoopUnroll,
                                       StrategyKind::ConstantFoldPropagate, StrategyKind::CommonSubexprElim,
                                       StrategyKind::LibraryReplacement};
  int jobs = 1;

  bool is_enabled(StrategyKind k) const;
  void validate() const;
};

nlohmann::json optimize_config_to_json(const OptimizeConfig& c);
/// Missing keys keep their defaults.
OptimizeConfig optimize_config_from_json(const nlohmann::json& j);

/// Outcome of one transform. Not-applicable is not an error: `applied` is
/// false and `reason` says why.
struct Refactoring {
  bool applied = false;
  std::string reason;
  std::string description;
  lang::Program program;
};

/// Pretty-prints, re-parses and checks a refactored program. Throws
/// Error("internal") if a transform produced an invalid program.
lang::CheckedProgram recheck(const lang::Program& p);

Refactoring apply_if_combination(const lang::CheckedProgram& cp, const std::string& method);
/// Inlines `callee` at its call sites in `caller` (every caller when empty).
/// Statement calls of void callees get the body with renamed locals;
/// single-return callees are substituted into expressions.
Refactoring apply_method_inline(const lang::CheckedProgram& cp, const std::string& callee, const std::string& caller,
                                int max_statements = 30);
/// Hoists loop-invariant pure subexpressions of the loop condition, and
/// top-level initialized declarations of the body, in front of the loop.
Refactoring apply_loop_invariant_motion(const lang::CheckedProgram& cp, const std::string& loop_block);
/// factor 0 picks the largest of `allowed` that divides the trip range.
Refactoring apply_loop_unroll(const lang::CheckedProgram& cp, const std::string& loop_block, int factor,
                              const std::vector<int>& allowed = {2, 4, 8});
Refactoring apply_library_replacement(const lang::CheckedProgram& cp, const std::string& loop_block,
                                      const std::string& pattern = "buffer_copy");
Refactoring apply_constant_fold_propagate(const lang::CheckedProgram& cp, const std::string& method);
/// Binds repeated pure subexpressions to temporaries when the modeled saving
/// exceeds the cost of the added declaration.
Refactoring apply_cse(const lang::CheckedProgram& cp, const std::string& method, const std::vector<double>& cost_uJ);

Refactoring apply_strategy(const lang::CheckedProgram& cp, const Strategy& s, const OptimizeConfig& cfg,
                           const std::vector<double>& cost_uJ);

// Differential equivalence.

struct EquivalenceVerdict {
  bool pass = false;
  int cases = 0;
  std::string diverging_case;
  std::string detail;
};

/// `n` fresh seeded cases without ablation.
std::vector<ExecutionCase> equivalence_corpus(const lang::CheckedProgram& cp, int n, std::uint64_t seed,
                                              std::int64_t frames);

/// Runs both programs on every case with ablations removed. PASS iff no run
/// fails and every output and final state digest matches.
EquivalenceVerdict check_equivalence(const lang::CheckedProgram& original, const lang::CheckedProgram& refactored,
                                     const std::vector<ExecutionCase>& cases, int jobs = 1);

// Modeled evaluation.

/// Operation costs used for refactored programs: the model's cost where the
/// op was observed in training, otherwise `fallback`.
struct CostBasis {
  std::vector<double> cost_uJ;
  std::vector<std::string> fallback_ops;
};
CostBasis cost_basis(const EnergyModel& model, const CostTable& fallback);

struct ModeledRun {
  double energy_J = 0.0;
  OpCountVector op_counts;
  EnergyProfile profile;  // summed over the cases
};

ModeledRun modeled_run(const lang::CheckedProgram& cp, const std::vector<ExecutionCase>& cases,
                       const CostBasis& basis, int jobs = 1);

struct CandidateStrategy {
  Strategy strategy;
  std::string rule;
  double saving_J = 0.0;    // modeled, estimation cases, applied alone
  double saving_pct = 0.0;  // of the estimation-case total
};

/// Rule table over the hot block: Control-dominant inside a for loop ->
/// LoopUnroll; repeated predicates in the method -> IfCombination; small
/// callees invoked from the block, or the block being a small method ->
/// MethodInline; invariant condition parts or body declarations ->
/// LoopInvariantMotion; element copy loop -> LibraryReplacement;
/// Arithmetic-dominant -> ConstantFoldPropagate, CommonSubexprElim.
/// Applicable candidates with a positive modeled saving, descending saving.
std::vector<CandidateStrategy> select_strategies(const lang::CheckedProgram& cp, const HotBlock& block,
                                                 const EnergyProfile& profile, const CostBasis& basis,
                                                 const std::vector<ExecutionCase>& estimation_cases,
                                                 const OptimizeConfig& cfg);

struct StepReport {
  Strategy strategy;
  std::string hot_block;
  bool applied = false;
  std::string reason;
  std::string description;
  EquivalenceVerdict verdict;
  double energy_before_J = 0.0;
  double energy_after_J = 0.0;
  double saving_pct = 0.0;             // of energy_before_J
  double cumulative_saving_pct = 0.0;  // of the original program's energy
  std::map<std::string, std::int64_t> op_deltas;  // after - before, nonzero
};

struct HotBlockCandidates {
  HotBlock block;
  std::vector<CandidateStrategy> candidates;
};

struct OptimizationReport {
  std::string program;
  HotBlockPolicy policy;
  int corpus_cases = 0;
  int equivalence_cases = 0;
  std::vector<HotBlock> hot_blocks;
  std::vector<HotBlockCandidates> candidates;
  std::vector<StepReport> steps;
  double original_J = 0.0;
  double final_J = 0.0;
  double total_saving_pct = 0.0;
  std::vector<std::string> fallback_ops;
  std::string refactored_source;
};

/// Hot-spot identification, strategy selection and refactoring: hot blocks
/// in cost order, each block's candidates applied cumulatively while they
/// stay applicable, pass the differential check and lower the modeled
/// energy.
OptimizationReport optimize(const lang::CheckedProgram& cp, const EnergyModel& model,
                            const std::vector<ExecutionCase>& cases, const HotBlockPolicy& policy,
                            const OptimizeConfig& cfg, const CostTable& fallback = CostTable::defaults());

/// Applies `plan` in order, cumulatively, reporting each step. A step that
/// is not applicable or fails the differential check is reported and
/// skipped.
OptimizationReport evaluate(const lang::CheckedProgram& cp, const std::vector<Strategy>& plan,
                            const EnergyModel& model, const std::vector<ExecutionCase>& cases,
                            const OptimizeConfig& cfg, const CostTable& fallback = CostTable::defaults());

nlohmann::json report_to_json(const OptimizationReport& r);
std::string report_markdown(const OptimizationReport& r);

}  // namespace enerlyze
