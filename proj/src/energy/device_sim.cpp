#include "enerlyze/device_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "enerlyze/random.hpp"

namespace enerlyze {
namespace {

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

// Costs of the seeded table in microjoules. Ops not listed fall back to a
// per-category rule in default_cost.
const std::unordered_map<std::string, double>& explicit_costs() {
  static const std::unordered_map<std::string, double> m = {
      {"MethodInvocation", 14.2},
      {"BlockGoto_if", 6.7},
      {"BlockGoto_for", 4.1},
      {"BlockGoto_while", 1.1},
      {"BlockGoto_switch", 5.2},
      {"FieldReference", 1.25},
      {"ArrayReference", 1.6},
      {"Increment", 0.48},
      {"Decrement", 0.5},
      {"Negation_int", 0.4},
      {"Negation_float", 0.45},
      {"And", 0.65},
      {"Or", 0.66},
      {"Not", 0.5},
      {"BitAnd_int_int", 0.45},
      {"BitOr_int_int", 0.46},
      {"SignedShiftLeft_int_int", 0.5},
      {"SignedShiftRight_int_int", 0.52},
      {"Return_void", 0.9},
      {"Assign_int_int", 1.919},
      {"Assign_float_float", 0.88},
      {"Assign_bool_bool", 0.8},
      {"Assign_float_int", 0.95},
      {"Declaration_int", 0.6},
      {"Declaration_float", 0.62},
      {"Declaration_bool", 0.58},
      {"Declaration_Object", 2.97},
      {"New_Object", 9.5},
      {"New_int[]", 8.0},
      {"New_float[]", 8.1},
      {"New_char[]", 7.9},
      {"Conversion_int_float", 0.7},
      {"Conversion_float_int", 0.9},
      {"Less_int_int", 2.357},
      {"Addition_int_int", 0.537},
      {"Equal_bool_bool", 0.7},
      {"Equal_null_null", 0.6},
      {"Library_list_new", 8.0},
      {"Library_list_add", 3.2},
      {"Library_list_get", 2.4},
      {"Library_list_set", 2.6},
      {"Library_list_size", 1.2},
      {"Library_buffer_new", 9.0},
      {"Library_buffer_put", 0.2186},
      {"Library_buffer_get", 0.2186},
      {"Library_buffer_set", 3.6},
      {"Library_buffer_limit", 0.2186},
      {"Library_buffer_position", 1.1},
      {"Library_buffer_clear", 1.5},
      {"Library_buffer_bulk_put", 12.5},
      {"Library_math_sqrt", 3.1},
      {"Library_math_sin", 4.4},
      {"Library_math_cos", 4.4},
      {"Library_math_abs", 0.9},
      {"Library_math_max", 1.0},
      {"Library_math_min", 1.0},
      {"Library_math_floor", 1.3},
      {"Library_math_imax", 0.8},
      {"Library_math_imin", 0.8},
      {"Library_math_iabs", 0.7},
      {"Library_array_length", 0.9},
      {"Library_emit", 2.0},
  };
  return m;
}

double signature_extra(std::string_view name) {
  if (name.ends_with("_float_float")) return 0.4;
  if (name.ends_with("_int_float") || name.ends_with("_float_int")) return 0.3;
  return 0.0;
}

double default_cost(const OperationKind& op) {
  const std::string_view n = op.name;
  if (auto it = explicit_costs().find(op.name); it != explicit_costs().end()) return it->second;
  if (starts_with(n, "Addition_")) return 0.52 + signature_extra(n);
  if (starts_with(n, "Subtraction_")) return 0.55 + signature_extra(n);
  if (starts_with(n, "Multi_")) return 0.95 + signature_extra(n);
  if (starts_with(n, "Division_")) return 2.3 + signature_extra(n);
  if (starts_with(n, "Less_")) return 0.9 + signature_extra(n);
  if (starts_with(n, "LessEqual_")) return 0.92 + signature_extra(n);
  if (starts_with(n, "Greater_")) return 0.91 + signature_extra(n);
  if (starts_with(n, "GreaterEqual_")) return 0.93 + signature_extra(n);
  if (starts_with(n, "Equal_")) {
    if (n.find("null") != std::string_view::npos) return 0.78;
    if (n.find("Object") != std::string_view::npos || n.find("[]") != std::string_view::npos) return 0.9;
    return 0.85 + signature_extra(n);
  }
  if (starts_with(n, "Parameter_")) return n == "Parameter_int" || n == "Parameter_float" || n == "Parameter_bool" ? 1.1 : 1.3;
  if (starts_with(n, "Return_")) return 1.4;
  if (starts_with(n, "Assign_")) return 1.05;
  if (starts_with(n, "Declaration_")) return 2.2;
  throw Error("internal", "no default cost for operation " + op.name);
}

std::uint64_t trace_seed(std::uint64_t seed, std::string_view case_id, int replicate) {
  Fnv1a h;
  h.add_string(case_id);
  return mix_seed(mix_seed(seed, h.value()), static_cast<std::uint64_t>(replicate));
}

// Samples at 0, dt, 2dt, ... with the last one clipped to `duration_s`; every
// interval carries `power_W` so the right-Riemann sum is power * duration.
PowerTrace constant_trace(double duration_s, double power_W, const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw Error("input", "cannot simulate a trace of zero duration");
  const double dt = 1.0 / cfg.sample_rate_Hz;
  const auto n = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(duration_s / dt - 1e-9)));
  PowerTrace trace;
  trace.samples.reserve(static_cast<std::size_t>(n) + 1);
  Rng rng(seed);
  const bool noisy = cfg.noise == NoiseModel::MultiplicativeGaussian && cfg.sigma_rel > 0.0;
  for (std::int64_t i = 0; i <= n; ++i) {
    const double t = i == n ? duration_s : std::min(duration_s, static_cast<double>(i) * dt);
    double p = power_W;
    if (noisy) p = std::max(0.0, p * (1.0 + cfg.sigma_rel * rng.normal()));
    trace.samples.push_back({t, p});
  }
  return trace;
}

}  // namespace

CostTable CostTable::defaults() {
  CostTable t;
  const auto ops = op_universe();
  t.cost_uJ.reserve(ops.size());
  for (const auto& op : ops) t.cost_uJ.push_back(default_cost(op));
  return t;
}

double CostTable::cost(std::string_view op) const { return cost_uJ.at(static_cast<std::size_t>(op_id(op))); }

void CostTable::set(std::string_view op, double uJ) { cost_uJ.at(static_cast<std::size_t>(op_id(op))) = uJ; }

void CostTable::validate() const {
  const auto ops = op_universe();
  if (cost_uJ.size() != ops.size()) throw Error("input", "cost table does not cover the operation universe");
  if (!(idle_power_W > 0.0) || !std::isfinite(idle_power_W)) throw Error("input", "idle power must be positive");
  const int mi = ops::method_invocation();
  for (std::size_t j = 0; j < ops.size(); ++j) {
    if (!(cost_uJ[j] >= 0.0) || !std::isfinite(cost_uJ[j]))
      throw Error("input", "cost of " + ops[j].name + " must be a finite non-negative number");
    if (static_cast<int>(j) != mi && cost_uJ[j] >= cost_uJ[static_cast<std::size_t>(mi)])
      throw Error("input", "MethodInvocation must be the most expensive operation, but " + ops[j].name +
                               " costs as much or more");
  }
}

nlohmann::json cost_table_to_json(const CostTable& t) {
  nlohmann::json costs = nlohmann::json::object();
  const auto ops = op_universe();
  for (std::size_t j = 0; j < ops.size(); ++j) costs[ops[j].name] = t.cost_uJ.at(j);
  return {{"idle_power_W", t.idle_power_W}, {"cost_uJ", costs}};
}

CostTable cost_table_from_json(const nlohmann::json& j) {
  CostTable t = CostTable::defaults();
  try {
    if (j.contains("idle_power_W")) t.idle_power_W = j.at("idle_power_W").get<double>();
    if (j.contains("cost_uJ")) {
      for (const auto& [name, v] : j.at("cost_uJ").items()) {
        const auto id = find_op(name);
        if (!id) throw Error("input", "cost table names unknown operation " + name);
        t.cost_uJ[static_cast<std::size_t>(*id)] = v.get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("input", std::string("malformed cost table: ") + e.what());
  }
  t.validate();
  return t;
}

void SimConfig::validate() const {
  if (!(sample_rate_Hz > 0.0) || !std::isfinite(sample_rate_Hz)) throw Error("input", "sample rate must be positive");
  if (!(sigma_rel >= 0.0) || !std::isfinite(sigma_rel)) throw Error("input", "noise sigma must be non-negative");
  if (!(seconds_per_step > 0.0)) throw Error("input", "seconds per step must be positive");
}

double modeled_energy_J(const OpCountVector& n_e, const CostTable& table) {
  if (n_e.size() != table.cost_uJ.size()) throw Error("input", "operation counts do not match the cost table");
  double uJ = 0.0;
  for (std::size_t j = 0; j < n_e.size(); ++j) uJ += static_cast<double>(n_e[j]) * table.cost_uJ[j];
  return uJ * 1e-6;
}

PowerTrace simulate_counts(const OpCountVector& n_e, double duration_s, std::string_view case_id,
                           const CostTable& table, const SimConfig& cfg, int replicate) {
  if (!(duration_s > 0.0)) throw Error("input", "cannot simulate case " + std::string(case_id) + " with zero duration");
  const double power = table.idle_power_W + modeled_energy_J(n_e, table) / duration_s;
  return constant_trace(duration_s, power, cfg, trace_seed(cfg.seed, case_id, replicate));
}

PowerTrace simulate_power(const ExecutionLog& log, const OperationDictionary& dict, const CostTable& table,
                          const SimConfig& cfg, int replicate) {
  if (log.failed) throw Error("input", "cannot simulate failed case " + log.case_id + ": " + log.error);
  const auto n_e = total_op_counts(log.block_ids, log.block_counts, dict);
  return simulate_counts(n_e, log.duration_s, log.case_id, table, cfg, replicate);
}

PowerTrace simulate_idle(double duration_s, const CostTable& table, const SimConfig& cfg, int replicate) {
  return constant_trace(duration_s, table.idle_power_W, cfg, trace_seed(cfg.seed, "\x01idle", replicate));
}

std::string trace_to_csv(const PowerTrace& trace) {
  std::string out = "t_s,power_w\n";
  char buf[64];
  for (const auto& s : trace.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.t_s, s.power_W);
    out += buf;
  }
  return out;
}

PowerTrace trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("input", "empty trace file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_s,power_w") throw Error("input", "trace header must be t_s,power_w");
  PowerTrace trace;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    char* end1 = nullptr;
    char* end2 = nullptr;
    const std::string a = line.substr(0, comma);
    const std::string b = comma == std::string::npos ? "" : line.substr(comma + 1);
    const double t = std::strtod(a.c_str(), &end1);
    const double p = std::strtod(b.c_str(), &end2);
    if (comma == std::string::npos || a.empty() || b.empty() || *end1 != '\0' || *end2 != '\0')
      throw Error("input", "malformed trace row " + std::to_string(row));
    if (!(p >= 0.0) || !(t >= 0.0)) throw Error("input", "negative value in trace row " + std::to_string(row));
    trace.samples.push_back({t, p});
  }
  return trace;
}

}  // namespace enerlyze
