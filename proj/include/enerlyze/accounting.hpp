#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "enerlyze/model.hpp"

namespace enerlyze {

struct BlockProfile {
  std::string id;
  std::int64_t executions = 0;
  double cost_J = 0.0;
  /// (op id, joules) for the operations the block executed, by op id.
  std::vector<std::pair<int, double>> op_costs;

  /// Joules per grouped category (Assign, Declaration, Control, Array,
  /// Function, Boolean, Arithmetic, Library); every group is present.
  std::map<std::string, double> grouped() const;
};

/// The (id, cost, OpCosts) triples of one execution case; idle excluded.
struct EnergyProfile {
  std::string case_id;
  std::vector<BlockProfile> blocks;  // in block-map order
  double total_J = 0.0;

  const BlockProfile* find(std::string_view id) const;
};

/// cost(block i) = sum_j B[i] * O[i,j] * cost_j. Operations executed by the
/// log but never observed while fitting are an error listing them, unless
/// `fallback` supplies their cost; the ops it filled are appended to
/// `filled`.
EnergyProfile block_profiles(const ExecutionLog& log, const OperationDictionary& dict, const EnergyModel& model,
                             const CostTable* fallback = nullptr, std::vector<std::string>* filled = nullptr);

/// Sums the blocks whose id is `prefix` or starts with `prefix` + "." (a
/// loop body with its header blocks and nested blocks, for instance).
BlockProfile aggregate(const EnergyProfile& profile, const std::string& prefix);

/// Blocks by descending cost, ties by id.
std::vector<BlockProfile> ranked_blocks(const EnergyProfile& profile);

/// Observed operations by descending single-execution cost, ties by name.
std::vector<std::pair<std::string, double>> rank_operations(const EnergyModel& model);

/// Percentage of the profile total spent in the selected blocks. Throws for
/// a zero total.
double share_of_total(const EnergyProfile& profile, const std::function<bool(const BlockProfile&)>& selector);

nlohmann::json profile_to_json(const EnergyProfile& profile, const EnergyModel* model = nullptr);
EnergyProfile profile_from_json(const nlohmann::json& j);

/// Markdown with the top-N block table, the grouped-category view of those
/// blocks and the operation ranking. Percentages have one decimal.
std::string profile_report_markdown(const EnergyProfile& profile, const EnergyModel& model, int top_n = 10);

/// Percentage with one decimal, as in the report tables.
std::string format_percent(double percent);

}  // namespace enerlyze
