#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "enerlyze/blocks.hpp"
#include "enerlyze/interp.hpp"

namespace enerlyze {

/// Ground-truth energy per operation execution, in microjoules, plus the
/// device's idle power. Costs are parallel to op_universe().
struct CostTable {
  std::vector<double> cost_uJ;
  double idle_power_W = 0.5;

  /// The seeded table: BlockGoto_if 6.7, BlockGoto_for 4.1,
  /// BlockGoto_while 1.1, Declaration_Object 2.97 and MethodInvocation
  /// strictly the most expensive operation.
  static CostTable defaults();

  double cost(std::string_view op) const;
  void set(std::string_view op, double uJ);
  /// Throws Error("input") for negative or non-finite costs, non-positive
  /// idle power, or a MethodInvocation that is not the strict maximum.
  void validate() const;
};

nlohmann::json cost_table_to_json(const CostTable& t);
/// Operations missing from the JSON keep their default cost.
CostTable cost_table_from_json(const nlohmann::json& j);

enum class NoiseModel { None, MultiplicativeGaussian };

struct SimConfig {
  double sample_rate_Hz = 30.0;
  NoiseModel noise = NoiseModel::None;
  double sigma_rel = 0.0;
  std::uint64_t seed = 42;
  /// Passed to the interpreter by the pipeline; logs carry the resulting
  /// duration.
  double seconds_per_step = 1e-6;

  void validate() const;
};

struct PowerSample {
  double t_s = 0.0;
  double power_W = 0.0;
};

struct PowerTrace {
  std::vector<PowerSample> samples;
};

/// Piecewise-constant trace sampled at `sample_rate_Hz` over the run's
/// duration whose right-Riemann integral is idle_power * duration plus
/// sum_j cost_j * N_e(op_j). With noise, every sample is scaled by an
/// independent N(1, sigma_rel) factor (clamped at zero), seeded by
/// (cfg.seed, case_id, replicate).
PowerTrace simulate_power(const ExecutionLog& log, const OperationDictionary& dict, const CostTable& table,
                          const SimConfig& cfg, int replicate = 0);
PowerTrace simulate_counts(const OpCountVector& n_e, double duration_s, std::string_view case_id,
                           const CostTable& table, const SimConfig& cfg, int replicate = 0);
/// Constant idle power over `duration_s`, with the same noise model.
PowerTrace simulate_idle(double duration_s, const CostTable& table, const SimConfig& cfg, int replicate = 0);

/// Modeled energy of executed operations in joules: sum_j cost_j * N_e[j].
double modeled_energy_J(const OpCountVector& n_e, const CostTable& table);

std::string trace_to_csv(const PowerTrace& trace);
PowerTrace trace_from_csv(const std::string& text);

}  // namespace enerlyze
