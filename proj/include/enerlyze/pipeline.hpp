#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "enerlyze/accounting.hpp"
#include "enerlyze/optimize.hpp"

namespace enerlyze {

/// Everything one end-to-end run needs; the seed reaches every seeded stage.
struct PipelineConfig {
  std::string program_name = "program";
  std::uint64_t seed = 42;
  int n_cases = 200;
  std::int64_t frame_budget = 60;
  int replicate_count = 10;
  AblationPolicy ablation = AblationPolicy::RandomK;
  SimConfig sim;  // seed is overridden by `seed`
  CostTable table = CostTable::defaults();
  FitConfig fit;  // seed is overridden by `seed`
  int folds = 4;
  double threshold = 0.85;
  /// Trains on the program's cases plus the generated calibration cases.
  bool calibration = true;
  int calibration_cases = 200;
  HotBlockPolicy policy = HotBlockPolicy::share_threshold(0.10);
  OptimizeConfig optimize;  // seed is overridden by `seed`
  /// Program cases handed to the optimizer (first N; all when 0). The
  /// differential check adds optimize.equivalence_cases fresh ones.
  int optimize_cases = 20;
  int top_n = 10;
  int jobs = 1;

  void validate() const;
};

struct PipelineResult {
  lang::CheckedProgram program;
  BlockMap blocks;
  OperationDictionary dictionary;
  std::vector<ExecutionCase> cases;
  std::vector<ExecutionLog> logs;
  std::vector<CaseEnergy> energies;
  Dataset dataset;
  EnergyModel model;
  bool optimized = false;  // false when the model was rejected
  EnergyProfile profile;   // the unablated baseline case
  OptimizationReport report;
};

/// cases -> run -> simulate and measure -> fit -> account -> optimize. Stops
/// after fitting when the model is rejected (`optimized` stays false).
PipelineResult run_pipeline(const std::string& source, const PipelineConfig& cfg);

/// Serialized artifacts by file name (ast.json, dictionary.json, cases.json,
/// logs.jsonl, energies.json, model.json, profile.json, profile.md,
/// report.json, report.md, refactored.esrc). Identical inputs give
/// byte-identical contents.
std::map<std::string, std::string> pipeline_artifacts(const PipelineResult& r, const PipelineConfig& cfg);

/// JSON text as written by every command: two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace enerlyze
