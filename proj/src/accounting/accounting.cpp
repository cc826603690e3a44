#include "enerlyze/accounting.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "enerlyze/common.hpp"

namespace enerlyze {

namespace {

bool model_observed(const EnergyModel& m, std::size_t j) {
  return m.columns.observed.empty() || (j < m.columns.observed.size() && m.columns.observed[j]);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::map<std::string, double> BlockProfile::grouped() const {
  std::map<std::string, double> g;
  for (const auto& name : group_names()) g[name] = 0.0;
  const auto ops = op_universe();
  for (const auto& [op, j] : op_costs) g[group_of(ops[static_cast<std::size_t>(op)].category)] += j;
  return g;
}

const BlockProfile* EnergyProfile::find(std::string_view id) const {
  for (const auto& b : blocks)
    if (b.id == id) return &b;
  return nullptr;
}

EnergyProfile block_profiles(const ExecutionLog& log, const OperationDictionary& dict, const EnergyModel& model,
                             const CostTable* fallback, std::vector<std::string>* filled) {
  const auto ops = op_universe();
  if (model.cost_uJ.size() != ops.size()) throw Error("input", "model has no cost for every operation");
  if (log.block_ids.size() != log.block_counts.size()) throw Error("input", "log block ids and counts differ in length");

  std::vector<double> cost = model.cost_uJ;
  std::vector<std::string> missing;
  const auto n_e = total_op_counts(log.block_ids, log.block_counts, dict);
  for (std::size_t j = 0; j < ops.size(); ++j) {
    if (n_e[j] == 0 || model_observed(model, j)) continue;
    missing.push_back(ops[j].name);
    if (fallback) cost[j] = fallback->cost_uJ.at(j);
  }
  if (!missing.empty()) {
    if (!fallback) {
      std::string list;
      for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
      throw Error("input", "operations not observed while fitting the model: " + list);
    }
    if (filled) filled->insert(filled->end(), missing.begin(), missing.end());
  }

  EnergyProfile p;
  p.case_id = log.case_id;
  for (std::size_t i = 0; i < log.block_ids.size(); ++i) {
    const auto row = dict.find(log.block_ids[i]);
    if (!row) throw Error("input", "block '" + log.block_ids[i] + "' is not in the operation dictionary");
    BlockProfile b;
    b.id = log.block_ids[i];
    b.executions = log.block_counts[i];
    const auto& o = dict.counts[static_cast<std::size_t>(*row)];
    for (std::size_t j = 0; j < o.size(); ++j) {
      if (o[j] == 0) continue;
      const double joules = static_cast<double>(b.executions) * static_cast<double>(o[j]) * cost[j] * 1e-6;
      b.op_costs.emplace_back(static_cast<int>(j), joules);
      b.cost_J += joules;
    }
    p.total_J += b.cost_J;
    p.blocks.push_back(std::move(b));
  }
  return p;
}

BlockProfile aggregate(const EnergyProfile& profile, const std::string& prefix) {
  BlockProfile out;
  out.id = prefix;
  std::map<int, double> ops;
  const std::string dotted = prefix + ".";
  for (const auto& b : profile.blocks) {
    if (b.id != prefix && b.id.rfind(dotted, 0) != 0) continue;
    if (b.id == prefix) out.executions = b.executions;
    out.cost_J += b.cost_J;
    for (const auto& [op, j] : b.op_costs) ops[op] += j;
  }
  out.op_costs.assign(ops.begin(), ops.end());
  return out;
}

std::vector<BlockProfile> ranked_blocks(const EnergyProfile& profile) {
  auto v = profile.blocks;
  std::stable_sort(v.begin(), v.end(), [](const BlockProfile& a, const BlockProfile& b) {
    if (a.cost_J != b.cost_J) return a.cost_J > b.cost_J;
    return a.id < b.id;
  });
  return v;
}

std::vector<std::pair<std::string, double>> rank_operations(const EnergyModel& model) {
  std::vector<std::pair<std::string, double>> v;
  const auto ops = op_universe();
  for (std::size_t j = 0; j < model.cost_uJ.size() && j < ops.size(); ++j)
    if (model_observed(model, j)) v.emplace_back(ops[j].name, model.cost_uJ[j]);
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return v;
}

double share_of_total(const EnergyProfile& profile, const std::function<bool(const BlockProfile&)>& selector) {
  if (!(profile.total_J > 0.0)) throw Error("input", "profile total energy is zero");
  double sel = 0.0;
  for (const auto& b : profile.blocks)
    if (selector(b)) sel += b.cost_J;
  return 100.0 * sel / profile.total_J;
}

nlohmann::json profile_to_json(const EnergyProfile& profile, const EnergyModel* model) {
  const auto ops = op_universe();
  // Members of groups whose individual costs the data cannot separate are
  // reported only as their sum.
  std::map<int, std::string> merged;
  if (model) {
    for (const auto& g : model->columns.groups) {
      if (g.split_identifiable || g.ops.size() < 2) continue;
      std::string name;
      for (int op : g.ops) name += (name.empty() ? "" : "+") + ops[static_cast<std::size_t>(op)].name;
      for (int op : g.ops) merged[op] = name;
    }
  }
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : profile.blocks) {
    nlohmann::json oc = nlohmann::json::object();
    for (const auto& [op, j] : b.op_costs) {
      const auto it = merged.find(op);
      if (it == merged.end()) {
        oc[ops[static_cast<std::size_t>(op)].name] = j;
      } else {
        const double prev = oc.contains(it->second) ? oc[it->second].get<double>() : 0.0;
        oc[it->second] = prev + j;
      }
    }
    nlohmann::json groups = nlohmann::json::object();
    for (const auto& [g, j] : b.grouped()) groups[g] = j;
    blocks.push_back({{"id", b.id}, {"executions", b.executions}, {"cost_J", b.cost_J}, {"op_costs", oc}, {"groups", groups}});
  }
  nlohmann::json out = {{"case_id", profile.case_id}, {"total_J", profile.total_J}, {"blocks", blocks}};
  if (!merged.empty()) {
    nlohmann::json unsplit = nlohmann::json::array();
    for (const auto& [op, name] : merged) unsplit.push_back(ops[static_cast<std::size_t>(op)].name);
    out["split_unavailable"] = unsplit;
  }
  return out;
}

EnergyProfile profile_from_json(const nlohmann::json& j) {
  try {
    EnergyProfile p;
    p.case_id = j.at("case_id").get<std::string>();
    p.total_J = j.at("total_J").get<double>();
    for (const auto& jb : j.at("blocks")) {
      BlockProfile b;
      b.id = jb.at("id").get<std::string>();
      b.executions = jb.at("executions").get<std::int64_t>();
      b.cost_J = jb.at("cost_J").get<double>();
      for (const auto& [name, v] : jb.at("op_costs").items()) {
        const auto op = find_op(name);
        if (!op) throw Error("input", "profile names an operation that cannot be split: " + name);
        b.op_costs.emplace_back(*op, v.get<double>());
      }
      std::sort(b.op_costs.begin(), b.op_costs.end());
      p.blocks.push_back(std::move(b));
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error("input", std::string("malformed profile: ") + e.what());
  }
}

std::string format_percent(double percent) {
  std::string s = fixed(percent, 1);
  if (s == "-0.0") s = "0.0";
  return s + "%";
}

std::string profile_report_markdown(const EnergyProfile& profile, const EnergyModel& model, int top_n) {
  std::ostringstream md;
  const auto ranked = ranked_blocks(profile);
  const std::size_t n = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max(top_n, 0)));
  const double total = profile.total_J;
  auto share = [&](double j) { return total > 0.0 ? format_percent(100.0 * j / total) : std::string("n/a"); };

  md << "# Energy profile: " << profile.case_id << "\n\n";
  md << "Total (excluding idle): " << fixed(total * 1e3, 3) << " mJ\n\n";
  md << "## Costliest blocks\n\n";
  md << "| Rank | Block | Energy (mJ) | Executions | Share |\n";
  md << "|---:|---|---:|---:|---:|\n";
  for (std::size_t i = 0; i < n; ++i)
    md << "| " << i + 1 << " | " << ranked[i].id << " | " << fixed(ranked[i].cost_J * 1e3, 3) << " | "
       << ranked[i].executions << " | " << share(ranked[i].cost_J) << " |\n";

  md << "\n## Operation groups\n\n";
  md << "| Group |";
  for (std::size_t i = 0; i < n; ++i) md << " " << ranked[i].id << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < n; ++i) md << "---:|";
  md << "\n";
  std::vector<std::map<std::string, double>> grouped;
  for (std::size_t i = 0; i < n; ++i) grouped.push_back(ranked[i].grouped());
  for (const auto& g : group_names()) {
    md << "| " << g << " |";
    for (std::size_t i = 0; i < n; ++i) {
      const double c = ranked[i].cost_J;
      md << " " << (c > 0.0 ? format_percent(100.0 * grouped[i].at(g) / c) : std::string("n/a")) << " |";
    }
    md << "\n";
  }

  const auto ops = rank_operations(model);
  md << "\n## Operation costs\n\n";
  md << "| Rank | Operation | Cost (uJ) |\n|---:|---|---:|\n";
  for (std::size_t i = 0; i < ops.size() && i < 30; ++i)
    md << "| " << i + 1 << " | " << ops[i].first << " | " << fixed(ops[i].second, 4) << " |\n";
  return md.str();
}

}  // namespace enerlyze
