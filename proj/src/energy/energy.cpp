#include "enerlyze/energy.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

namespace enerlyze {

double integrate(const PowerTrace& trace) {
  const auto& s = trace.samples;
  if (s.size() < 2) throw Error("input", "a trace needs at least two samples to integrate");
  double e = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double dt = s[i].t_s - s[i - 1].t_s;
    if (!(dt > 0.0))
      throw Error("input", "trace timestamps must be strictly increasing (sample " + std::to_string(i) + ")");
    e += s[i].power_W * dt;
  }
  return e;
}

double trace_duration(const PowerTrace& trace) {
  if (trace.samples.size() < 2) throw Error("input", "a trace needs at least two samples");
  return trace.samples.back().t_s - trace.samples.front().t_s;
}

ReplicateStats replicate_stats(const std::vector<double>& energies_J) {
  if (energies_J.empty()) throw Error("input", "replicate statistics need at least one energy");
  ReplicateStats st;
  // Welford's update keeps the variance accurate for nearly equal values.
  double mean = 0.0;
  double m2 = 0.0;
  for (double x : energies_J) {
    ++st.n;
    const double d = x - mean;
    mean += d / st.n;
    m2 += d * (x - mean);
  }
  if (!(mean > 0.0)) throw Error("input", "coefficient of variation is undefined for a non-positive mean");
  st.mean_J = mean;
  st.std_J = st.n > 1 ? std::sqrt(std::max(0.0, m2 / (st.n - 1))) : 0.0;
  st.cv = st.std_J / mean;
  return st;
}

CaseEnergy net_energy(const std::string& case_id, const std::vector<PowerTrace>& gross,
                      const std::vector<PowerTrace>& idle, bool scale_idle) {
  if (gross.empty()) throw Error("input", "case " + case_id + " has no gross traces");
  if (idle.empty()) throw Error("input", "case " + case_id + " has no idle traces");
  CaseEnergy e;
  e.case_id = case_id;
  std::vector<double> energies;
  energies.reserve(gross.size());
  double duration = 0.0;
  for (const auto& t : gross) {
    energies.push_back(integrate(t));
    duration += trace_duration(t);
  }
  e.duration_s = duration / static_cast<double>(gross.size());
  e.stats = replicate_stats(energies);
  e.gross_J = e.stats.mean_J;
  double idle_sum = 0.0;
  for (const auto& t : idle) {
    const double d = trace_duration(t);
    const double j = integrate(t);
    if (scale_idle) {
      idle_sum += j * (e.duration_s / d);
    } else {
      if (std::abs(d - e.duration_s) > 0.01 * e.duration_s)
        throw Error("input", "idle trace lasts " + std::to_string(d) + " s but case " + case_id + " lasts " +
                                 std::to_string(e.duration_s) + " s");
      idle_sum += j;
    }
  }
  e.idle_J = idle_sum / static_cast<double>(idle.size());
  e.net_J = e.gross_J - e.idle_J;
  return e;
}

std::vector<CaseEnergy> measure_cases(const std::vector<ExecutionLog>& logs, const OperationDictionary& dict,
                                      const CostTable& table, const SimConfig& cfg, int replicates, int jobs) {
  if (replicates < 1) throw Error("input", "replicate count must be at least 1");
  std::vector<CaseEnergy> out(logs.size());
  auto measure = [&](std::size_t i) {
    const auto& log = logs[i];
    SimConfig idle_cfg = cfg;
    Fnv1a h;
    h.add_string(log.case_id);
    idle_cfg.seed = mix_seed(cfg.seed, h.value());
    std::vector<PowerTrace> gross, idle;
    for (int r = 0; r < replicates; ++r) {
      gross.push_back(simulate_power(log, dict, table, cfg, r));
      idle.push_back(simulate_idle(log.duration_s, table, idle_cfg, r));
    }
    out[i] = net_energy(log.case_id, gross, idle);
  };
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || logs.size() < 2) {
    for (std::size_t i = 0; i < logs.size(); ++i) measure(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, logs.size()); ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < logs.size(); i = next++) {
        try {
          measure(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

nlohmann::json case_energies_to_json(const std::vector<CaseEnergy>& energies) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : energies) out.push_back(case_energy_to_json(e));
  return out;
}

std::vector<CaseEnergy> case_energies_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error("input", "case energies must be a JSON array");
  std::vector<CaseEnergy> out;
  for (const auto& e : j) out.push_back(case_energy_from_json(e));
  return out;
}

nlohmann::json case_energy_to_json(const CaseEnergy& e) {
  return {{"case_id", e.case_id}, {"gross_J", e.gross_J},   {"idle_J", e.idle_J},
          {"net_J", e.net_J},     {"cv", e.stats.cv},       {"duration_s", e.duration_s},
          {"std_J", e.stats.std_J}, {"replicates", e.stats.n}};
}

CaseEnergy case_energy_from_json(const nlohmann::json& j) {
  try {
    CaseEnergy e;
    e.case_id = j.at("case_id").get<std::string>();
    e.gross_J = j.at("gross_J").get<double>();
    e.idle_J = j.at("idle_J").get<double>();
    e.net_J = j.at("net_J").get<double>();
    e.stats.cv = j.at("cv").get<double>();
    e.stats.mean_J = e.gross_J;
    e.duration_s = j.value("duration_s", 0.0);
    e.stats.std_J = j.value("std_J", e.stats.cv * e.gross_J);
    e.stats.n = j.value("replicates", 1);
    if (!std::isfinite(e.net_J)) throw Error("input", "net energy of " + e.case_id + " is not finite");
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error("input", std::string("malformed case energy: ") + ex.what());
  }
}

}  // namespace enerlyze
