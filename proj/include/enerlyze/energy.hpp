#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "enerlyze/device_sim.hpp"

namespace enerlyze {

/// E = sum_{i>=1} power(t_i) * (t_i - t_{i-1}). Requires at least two
/// samples with strictly increasing timestamps.
double integrate(const PowerTrace& trace);

/// Duration covered by a trace, t_last - t_first.
double trace_duration(const PowerTrace& trace);

struct ReplicateStats {
  double mean_J = 0.0;
  double std_J = 0.0;  // sample standard deviation (n - 1)
  double cv = 0.0;
  int n = 0;
};

/// Throws Error("input") for an empty list or a non-positive mean.
ReplicateStats replicate_stats(const std::vector<double>& energies_J);

struct CaseEnergy {
  std::string case_id;
  double gross_J = 0.0;
  double idle_J = 0.0;
  double net_J = 0.0;
  double duration_s = 0.0;
  ReplicateStats stats;  // over the gross replicates
};

/// Net energy of a case: mean gross energy minus the mean idle energy. With
/// `scale_idle` the idle energy is rescaled to the case duration; without it
/// durations must agree within 1%.
CaseEnergy net_energy(const std::string& case_id, const std::vector<PowerTrace>& gross,
                      const std::vector<PowerTrace>& idle, bool scale_idle = true);

/// Simulates `replicates` gross traces per log and as many idle traces of
/// the case's duration, then nets them. Results are in log order.
std::vector<CaseEnergy> measure_cases(const std::vector<ExecutionLog>& logs, const OperationDictionary& dict,
                                      const CostTable& table, const SimConfig& cfg, int replicates, int jobs = 1);

nlohmann::json case_energies_to_json(const std::vector<CaseEnergy>& energies);
std::vector<CaseEnergy> case_energies_from_json(const nlohmann::json& j);

nlohmann::json case_energy_to_json(const CaseEnergy& e);
CaseEnergy case_energy_from_json(const nlohmann::json& j);

}  // namespace enerlyze
