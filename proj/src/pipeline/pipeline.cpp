#include "enerlyze/pipeline.hpp"

#include <nlohmann/json.hpp>

#include "enerlyze/calibration.hpp"
#include "enerlyze/lang/parser.hpp"

namespace enerlyze {

void PipelineConfig::validate() const {
  if (n_cases < 2) throw Error("input", "the pipeline needs at least 2 cases");
  if (frame_budget < 1) throw Error("input", "frame budget must be at least 1");
  if (replicate_count < 1) throw Error("input", "replicate count must be at least 1");
  if (folds < 2) throw Error("input", "cross-validation needs at least 2 folds");
  if (calibration && calibration_cases < 2) throw Error("input", "calibration needs at least 2 cases");
  if (optimize_cases < 0) throw Error("input", "optimize_cases must be non-negative");
  if (top_n < 1) throw Error("input", "top_n must be at least 1");
  if (jobs < 1) throw Error("input", "jobs must be at least 1");
  sim.validate();
  table.validate();
  policy.validate();
  optimize.validate();
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

PipelineResult run_pipeline(const std::string& source, const PipelineConfig& cfg) {
  cfg.validate();
  PipelineResult r{lang::check(lang::parse_source(source)), {}, {}, {}, {}, {}, {}, {}, false, {}, {}};
  r.blocks = divide_blocks(r.program);
  r.dictionary = build_dictionary(r.program, r.blocks);

  CaseDesign design;
  design.n_cases = cfg.n_cases;
  design.seed = cfg.seed;
  design.policy = cfg.ablation;
  design.frame_budget = cfg.frame_budget;
  design.replicate_count = cfg.replicate_count;
  r.cases = generate_cases(r.program, r.blocks, design);
  r.logs = run_all(r.program, r.blocks, r.cases, {}, cfg.jobs);
  for (const auto& log : r.logs)
    if (log.failed) throw Error("runtime", "case " + log.case_id + " failed in " + log.failed_block + ": " + log.error);

  SimConfig sim = cfg.sim;
  sim.seed = cfg.seed;
  r.energies = measure_cases(r.logs, r.dictionary, cfg.table, sim, cfg.replicate_count, cfg.jobs);
  r.dataset = make_dataset(r.logs, r.dictionary, r.energies);
  if (cfg.calibration) {
    const auto cal = calibration_dataset(cfg.table, sim, calibration_design(cfg.seed, cfg.calibration_cases),
                                         cfg.replicate_count, cfg.jobs);
    r.dataset.rows.insert(r.dataset.rows.end(), cal.rows.begin(), cal.rows.end());
  }
  FitConfig fit = cfg.fit;
  fit.seed = cfg.seed;
  r.model = build_model(r.dataset, cfg.folds, cfg.threshold, fit);
  if (!r.model.accepted) return r;

  std::vector<std::string> filled;
  r.profile = block_profiles(r.logs.front(), r.dictionary, r.model, &cfg.table, &filled);

  OptimizeConfig ocfg = cfg.optimize;
  ocfg.seed = cfg.seed;
  ocfg.jobs = cfg.jobs;
  std::vector<ExecutionCase> corpus = r.cases;
  if (cfg.optimize_cases > 0 && static_cast<int>(corpus.size()) > cfg.optimize_cases)
    corpus.resize(static_cast<std::size_t>(cfg.optimize_cases));
  r.report = optimize(r.program, r.model, corpus, cfg.policy, ocfg, cfg.table);
  r.report.program = cfg.program_name;
  r.optimized = true;
  return r;
}

std::map<std::string, std::string> pipeline_artifacts(const PipelineResult& r, const PipelineConfig& cfg) {
  std::map<std::string, std::string> out;
  out["ast.json"] = dump_json(lang::ast_to_json(r.program.program()));
  out["dictionary.json"] = dump_json(dictionary_to_json(r.dictionary));
  out["cases.json"] = dump_json(cases_to_json(r.cases));
  out["logs.jsonl"] = logs_to_jsonl(r.logs);
  out["energies.json"] = dump_json(case_energies_to_json(r.energies));
  out["dataset.json"] = dump_json(dataset_to_json(r.dataset));
  out["model.json"] = dump_json(model_to_json(r.model));
  if (r.optimized) {
    out["profile.json"] = dump_json(profile_to_json(r.profile, &r.model));
    out["profile.md"] = profile_report_markdown(r.profile, r.model, cfg.top_n);
    out["report.json"] = dump_json(report_to_json(r.report));
    out["report.md"] = report_markdown(r.report);
    out["refactored.esrc"] = r.report.refactored_source;
  }
  return out;
}

}  // namespace enerlyze
