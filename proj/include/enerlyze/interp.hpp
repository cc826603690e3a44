#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "enerlyze/blocks.hpp"
#include "enerlyze/lang/checker.hpp"

namespace enerlyze {

/// From `frame` on, the entry method receives `values` as its arguments
/// (converted to the parameter types) until the next event.
struct InputEvent {
  std::int64_t frame = 0;
  std::vector<double> values;

  friend bool operator==(const InputEvent&, const InputEvent&) = default;
};

struct ExecutionCase {
  std::string case_id;
  std::vector<InputEvent> inputs;  // sorted by frame
  std::vector<std::string> ablated_blocks;
  int replicate_count = 1;
  std::int64_t frame_budget = 1;

  friend bool operator==(const ExecutionCase&, const ExecutionCase&) = default;
};

struct RunConfig {
  /// Called once with no arguments before the first frame, if present.
  std::string init_method = "init";
  /// Called `frame_budget` times; parameters must be scalars.
  std::string entry_method = "frame";
  double seconds_per_step = 1e-6;
  std::int64_t max_steps = 200'000'000;
  int max_call_depth = 4096;
};

struct ExecutionLog {
  std::string case_id;
  std::vector<std::string> block_ids;
  std::vector<std::int64_t> block_counts;  // parallel to block_ids
  /// Digest of everything emitted and of every value returned by the entry
  /// method, in order.
  std::string output_digest;
  /// Digest of the heap reachable from globals after the last frame,
  /// independent of allocation addresses.
  std::string state_digest;
  std::int64_t step_count = 0;
  double duration_s = 0.0;
  bool failed = false;
  std::string error;
  std::string failed_block;

  std::int64_t count(std::string_view block_id) const;
};

/// Runs a case. Runtime errors do not throw; they mark the log failed with
/// the block that was executing. Invalid cases (unknown or non-ablatable
/// ablation targets, missing entry method, bad argument count) throw.
ExecutionLog run(const lang::CheckedProgram& program, const BlockMap& blocks, const ExecutionCase& c,
                 const RunConfig& cfg = {});
ExecutionLog run(const lang::CheckedProgram& program, const ExecutionCase& c, const RunConfig& cfg = {});

/// Runs like `run` but tallies each operation as it executes. Independent of
/// the operation dictionary, so it serves as the oracle for total_op_counts.
/// Throws Error("runtime") if the run fails.
OpCountVector step_trace(const lang::CheckedProgram& program, const BlockMap& blocks, const ExecutionCase& c,
                         const RunConfig& cfg = {});

/// Runs every case on up to `jobs` threads; results are in case order.
std::vector<ExecutionLog> run_all(const lang::CheckedProgram& program, const BlockMap& blocks,
                                  const std::vector<ExecutionCase>& cases, const RunConfig& cfg = {},
                                  int jobs = 1);

enum class AblationPolicy { CoverOnce, RandomK };

struct CaseDesign {
  int n_cases = 200;
  std::uint64_t seed = 42;
  AblationPolicy policy = AblationPolicy::RandomK;
  /// Blocks ablated per case under RandomK; 0 picks a third of the
  /// ablatable blocks (at least one).
  int k = 0;
  std::int64_t frame_budget = 60;
  int replicate_count = 10;
  /// Input events per case; the first is always at frame 0.
  int events_per_case = 6;
  /// Integer arguments are drawn from [0, int_max], floats from [0, 1),
  /// bools with probability 1/2.
  std::int64_t int_max = 479;
  std::string entry_method = "frame";
};

/// case_0000 is the unablated baseline. Throws Error("input") naming the
/// uncovered blocks when n_cases cannot ablate every ablatable block once.
std::vector<ExecutionCase> generate_cases(const lang::CheckedProgram& program, const BlockMap& blocks,
                                          const CaseDesign& design);

AblationPolicy parse_ablation_policy(std::string_view s);
const char* to_string(AblationPolicy p);

nlohmann::json case_to_json(const ExecutionCase& c);
ExecutionCase case_from_json(const nlohmann::json& j);
nlohmann::json cases_to_json(const std::vector<ExecutionCase>& cases);
std::vector<ExecutionCase> cases_from_json(const nlohmann::json& j);

nlohmann::json log_to_json(const ExecutionLog& log);
ExecutionLog log_from_json(const nlohmann::json& j);
std::string logs_to_jsonl(const std::vector<ExecutionLog>& logs);
std::vector<ExecutionLog> logs_from_jsonl(const std::string& text);

}  // namespace enerlyze
