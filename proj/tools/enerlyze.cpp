// enerlyze: command-line front end. Every subcommand reads and writes the
// library's file formats, so stages can run standalone or via `pipeline`.
//
// Exit codes: 0 success, 1 bad input (usage, I/O, syntax, type, runtime),
// 2 model rejected, 3 internal error. Errors are one JSON object on stderr.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "enerlyze/calibration.hpp"
#include "enerlyze/lang/parser.hpp"
#include "enerlyze/pipeline.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace enerlyze;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitRejected = 2;
constexpr int kExitInternal = 3;

struct ModelRejected {
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  out << text;
}

// `path` or stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error("input", "'" + path + "' is not valid JSON: " + e.what());
  }
}

lang::CheckedProgram load_program(const std::string& path) { return lang::check(lang::parse_source(read_file(path))); }

std::vector<ExecutionLog> load_logs(const std::string& path) { return logs_from_jsonl(read_file(path)); }

EnergyModel load_model(const std::string& path, bool require_accepted) {
  EnergyModel m = model_from_json(read_json(path));
  if (require_accepted && !m.accepted) throw ModelRejected{"model '" + path + "' was rejected at fit time"};
  return m;
}

CostTable load_table(const std::string& path) {
  if (path.empty()) return CostTable::defaults();
  CostTable t = cost_table_from_json(read_json(path));
  t.validate();
  return t;
}

std::vector<StrategyKind> parse_strategy_list(const std::string& text) {
  std::vector<StrategyKind> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_strategy_kind(item));
  if (out.empty()) throw Error("input", "empty strategy list");
  return out;
}

SimConfig sim_config(double sigma, double rate, std::uint64_t seed) {
  SimConfig s;
  s.sample_rate_Hz = rate;
  s.noise = sigma > 0.0 ? NoiseModel::MultiplicativeGaussian : NoiseModel::None;
  s.sigma_rel = sigma;
  s.seed = seed;
  s.validate();
  return s;
}

std::string trace_name(const std::string& case_id, bool idle, int replicate) {
  return case_id + (idle ? ".idle" : "") + ".r" + std::to_string(replicate) + ".csv";
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ENERLYZE_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::logic_error&) {
    }
    throw Error("input", std::string("ENERLYZE_SEED is not an unsigned integer: '") + env + "'");
  }
  return 42;
}

int fail(const std::string& kind, const std::string& message, int code, const SourceError* src = nullptr) {
  json err = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  if (src) {
    err["message"] = src->bare_message();
    err["line"] = src->pos().line;
    err["column"] = src->pos().column;
  }
  std::cerr << json{{"error", err}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source-level energy modeling, accounting and refactoring for .esrc programs"};
  app.require_subcommand(1);
  std::uint64_t seed = 42;
  int jobs = 1;
  try {
    seed = default_seed();
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), kExitInput);
  }
  app.add_option("--seed", seed, "Seed for every seeded stage (default: $ENERLYZE_SEED or 42)");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.fallthrough();

  // parse
  std::string program, out;
  auto* parse = app.add_subcommand("parse", "Parse and type-check; print the AST as JSON");
  parse->alias("dump-ast");
  parse->add_option("program", program, ".esrc source")->required();
  parse->add_option("--out", out, "Output file (default stdout)");
  parse->callback([&] { emit(out, dump_json(lang::ast_to_json(load_program(program).program()))); });

  // blocks
  std::string csv_out, map_out;
  auto* blocks = app.add_subcommand("blocks", "Divide into blocks; print the operation dictionary as JSON");
  blocks->add_option("program", program)->required();
  blocks->add_option("--out", out, "Dictionary JSON (default stdout)");
  blocks->add_option("--csv", csv_out, "Also write the dictionary as CSV");
  blocks->add_option("--map", map_out, "Also write the block map (blocks and edges) as JSON");
  blocks->callback([&] {
    const auto cp = load_program(program);
    const auto bm = divide_blocks(cp);
    const auto dict = build_dictionary(cp, bm);
    if (!csv_out.empty()) write_file(csv_out, dictionary_to_csv(dict));
    if (!map_out.empty()) write_file(map_out, dump_json(blockmap_to_json(bm)));
    emit(out, dump_json(dictionary_to_json(dict)));
  });

  // cases
  CaseDesign design;
  std::string policy_name = "random-k";
  auto* cases = app.add_subcommand("cases", "Generate execution cases as JSON");
  cases->add_option("program", program)->required();
  cases->add_option("--cases", design.n_cases, "Number of cases")->check(CLI::PositiveNumber);
  cases->add_option("--ablation-policy", policy_name, "cover-once or random-k");
  cases->add_option("--k", design.k, "Blocks ablated per case under random-k (0: a third)");
  cases->add_option("--frames", design.frame_budget, "Frames per case")->check(CLI::PositiveNumber);
  cases->add_option("--replicates", design.replicate_count, "Replicate runs per case")->check(CLI::PositiveNumber);
  cases->add_option("--events", design.events_per_case, "Input events per case")->check(CLI::PositiveNumber);
  cases->add_option("--out", out, "Output file (default stdout)");
  cases->callback([&] {
    const auto cp = load_program(program);
    design.seed = seed;
    design.policy = parse_ablation_policy(policy_name);
    emit(out, dump_json(cases_to_json(generate_cases(cp, divide_blocks(cp), design))));
  });

  // run
  std::string cases_path;
  auto* run = app.add_subcommand("run", "Run every case; write one log per line (JSONL)");
  run->add_option("program", program)->required();
  run->add_option("--cases", cases_path, "Cases JSON")->required();
  run->add_option("--out", out, "Output file (default stdout)");
  run->callback([&] {
    const auto cp = load_program(program);
    const auto logs = run_all(cp, divide_blocks(cp), cases_from_json(read_json(cases_path)), {}, jobs);
    emit(out, logs_to_jsonl(logs));
  });

  // simulate
  std::string logs_path, table_path, out_dir;
  double sigma = 0.0, rate = 30.0;
  int replicates = 10;
  auto* simulate = app.add_subcommand("simulate", "Simulate gross and idle power traces (CSV) for every log");
  simulate->add_option("program", program)->required();
  simulate->add_option("--logs", logs_path, "Logs JSONL")->required();
  simulate->add_option("--out-dir", out_dir, "Trace directory")->required();
  simulate->add_option("--cost-table", table_path, "Ground-truth cost table JSON (default: seeded table)");
  simulate->add_option("--sigma", sigma, "Multiplicative noise (0: none)")->check(CLI::NonNegativeNumber);
  simulate->add_option("--sample-rate", rate, "Samples per second")->check(CLI::PositiveNumber);
  simulate->add_option("--replicates", replicates, "Traces per case")->check(CLI::PositiveNumber);
  simulate->callback([&] {
    const auto cp = load_program(program);
    const auto dict = build_dictionary(cp, divide_blocks(cp));
    const auto table = load_table(table_path);
    const auto cfg = sim_config(sigma, rate, seed);
    for (const auto& log : load_logs(logs_path)) {
      // Same idle seeding as the in-process measurement.
      SimConfig idle_cfg = cfg;
      Fnv1a h;
      h.add_string(log.case_id);
      idle_cfg.seed = mix_seed(cfg.seed, h.value());
      for (int r = 0; r < replicates; ++r) {
        write_file((fs::path(out_dir) / trace_name(log.case_id, false, r)).string(),
                   trace_to_csv(simulate_power(log, dict, table, cfg, r)));
        write_file((fs::path(out_dir) / trace_name(log.case_id, true, r)).string(),
                   trace_to_csv(simulate_idle(log.duration_s, table, idle_cfg, r)));
      }
    }
  });

  // energy
  std::string traces_dir;
  bool exact_idle = false;
  auto* energy = app.add_subcommand("energy", "Integrate traces into per-case net energy JSON");
  energy->add_option("--traces", traces_dir, "Directory written by simulate")->required();
  energy->add_flag("--no-scale-idle", exact_idle, "Require idle traces of the case's duration instead of rescaling");
  energy->add_option("--out", out, "Output file (default stdout)");
  energy->callback([&] {
    std::map<std::string, std::pair<std::map<int, PowerTrace>, std::map<int, PowerTrace>>> by_case;
    if (!fs::is_directory(traces_dir)) throw Error("io", "'" + traces_dir + "' is not a directory");
    for (const auto& entry : fs::directory_iterator(traces_dir)) {
      const std::string name = entry.path().filename().string();
      if (entry.path().extension() != ".csv") continue;
      const auto r_at = name.rfind(".r");
      if (r_at == std::string::npos) continue;
      std::string stem = name.substr(0, r_at);
      const int replicate = std::stoi(name.substr(r_at + 2, name.size() - r_at - 6));
      const bool idle = stem.size() > 5 && stem.compare(stem.size() - 5, 5, ".idle") == 0;
      if (idle) stem.resize(stem.size() - 5);
      auto& slot = idle ? by_case[stem].second : by_case[stem].first;
      slot[replicate] = trace_from_csv(read_file(entry.path().string()));
    }
    if (by_case.empty()) throw Error("input", "no traces in '" + traces_dir + "'");
    std::vector<CaseEnergy> energies;
    for (const auto& [case_id, traces] : by_case) {
      std::vector<PowerTrace> gross, idle;
      for (const auto& [r, t] : traces.first) gross.push_back(t);
      for (const auto& [r, t] : traces.second) idle.push_back(t);
      if (idle.empty()) throw Error("input", "case " + case_id + " has no idle traces");
      energies.push_back(net_energy(case_id, gross, idle, !exact_idle));
    }
    emit(out, dump_json(case_energies_to_json(energies)));
  });

  // fit
  std::string dataset_path, energies_path, dataset_out;
  int folds = 4, cal_cases = 200;
  double threshold = 0.85;
  bool calibrate = false;
  auto* fit_cmd = app.add_subcommand("fit", "Fit operation costs by NNLS with k-fold cross-validation");
  fit_cmd->add_option("program", program, ".esrc source (with --logs and --energies)");
  fit_cmd->add_option("--dataset", dataset_path, "Dataset JSON instead of program, logs and energies");
  fit_cmd->add_option("--logs", logs_path, "Logs JSONL");
  fit_cmd->add_option("--energies", energies_path, "Case energy JSON");
  fit_cmd->add_flag("--calibration", calibrate, "Add simulated calibration cases to the training data");
  fit_cmd->add_option("--calibration-cases", cal_cases, "Calibration cases")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--cost-table", table_path, "Cost table for the calibration simulation");
  fit_cmd->add_option("--sigma", sigma, "Calibration noise")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--replicates", replicates, "Calibration replicates")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--k", folds, "Folds")->check(CLI::Range(2, 1000));
  fit_cmd->add_option("--threshold", threshold, "Minimum accuracy (1 - NMAE) over all folds");
  fit_cmd->add_option("--dataset-out", dataset_out, "Also write the training dataset");
  fit_cmd->add_option("--out", out, "Model JSON (default stdout)");
  fit_cmd->callback([&] {
    Dataset d;
    if (!dataset_path.empty()) {
      d = dataset_from_json(read_json(dataset_path));
    } else {
      if (program.empty() || logs_path.empty() || energies_path.empty())
        throw Error("input", "fit needs --dataset, or a program with --logs and --energies");
      const auto cp = load_program(program);
      const auto dict = build_dictionary(cp, divide_blocks(cp));
      d = make_dataset(load_logs(logs_path), dict, case_energies_from_json(read_json(energies_path)));
    }
    if (calibrate) {
      const auto cal = calibration_dataset(load_table(table_path), sim_config(sigma, 30.0, seed),
                                           calibration_design(seed, cal_cases), replicates, jobs);
      d.rows.insert(d.rows.end(), cal.rows.begin(), cal.rows.end());
    }
    if (!dataset_out.empty()) write_file(dataset_out, dump_json(dataset_to_json(d)));
    FitConfig fc;
    fc.seed = seed;
    const auto model = build_model(d, folds, threshold, fc);
    emit(out, dump_json(model_to_json(model)));
    if (!model.accepted) throw ModelRejected{"minimum fold accuracy is below the threshold"};
  });

  // account
  std::string model_path, case_id, report_path;
  int top_n = 10;
  auto* account = app.add_subcommand("account", "Energy profile of one case: per-block costs and report");
  account->add_option("program", program)->required();
  account->add_option("--model", model_path, "Model JSON")->required();
  account->add_option("--logs", logs_path, "Logs JSONL")->required();
  account->add_option("--case", case_id, "Case id (default: the first log)");
  account->add_option("--top", top_n, "Blocks in the report")->check(CLI::PositiveNumber);
  account->add_option("--cost-table", table_path, "Costs for operations the model never observed");
  account->add_option("--report", report_path, "Markdown report");
  account->add_option("--out", out, "Profile JSON (default stdout)");
  account->callback([&] {
    const auto cp = load_program(program);
    const auto dict = build_dictionary(cp, divide_blocks(cp));
    const auto model = load_model(model_path, true);
    const auto logs = load_logs(logs_path);
    if (logs.empty()) throw Error("input", "no logs");
    auto it = logs.begin();
    if (!case_id.empty()) {
      it = std::find_if(logs.begin(), logs.end(), [&](const ExecutionLog& l) { return l.case_id == case_id; });
      if (it == logs.end()) throw Error("input", "no log for case '" + case_id + "'");
    }
    const CostTable table = load_table(table_path);
    const auto profile = block_profiles(*it, dict, model, table_path.empty() ? nullptr : &table);
    if (!report_path.empty()) write_file(report_path, profile_report_markdown(profile, model, top_n));
    emit(out, dump_json(profile_to_json(profile, &model)));
  });

  // optimize and evaluate share these
  std::string policy_text = "share:0.10", strategies, config_path, emit_path, markdown_path;
  int max_cases = 20, eq_cases = -1;
  std::vector<std::string> plan;
  auto load_optimize_config = [&] {
    OptimizeConfig c = config_path.empty() ? OptimizeConfig{} : optimize_config_from_json(read_json(config_path));
    c.seed = seed;
    c.jobs = jobs;
    if (!strategies.empty()) c.enabled = parse_strategy_list(strategies);
    if (eq_cases >= 0) c.equivalence_cases = eq_cases;
    c.validate();
    return c;
  };
  auto load_corpus = [&] {
    auto c = cases_from_json(read_json(cases_path));
    if (max_cases > 0 && static_cast<int>(c.size()) > max_cases) c.resize(static_cast<std::size_t>(max_cases));
    return c;
  };
  auto write_report = [&](OptimizationReport& r) {
    r.program = fs::path(program).filename().string();
    if (!emit_path.empty()) write_file(emit_path, r.refactored_source);
    if (!markdown_path.empty()) write_file(markdown_path, report_markdown(r));
    emit(report_path, dump_json(report_to_json(r)));
  };

  auto* optimize_cmd = app.add_subcommand("optimize", "Find hot blocks, select strategies and refactor");
  optimize_cmd->add_option("program", program)->required();
  optimize_cmd->add_option("--model", model_path, "Model JSON")->required();
  optimize_cmd->add_option("--cases", cases_path, "Cases JSON (ablations are ignored)")->required();
  optimize_cmd->add_option("--policy", policy_text, "top:<k> or share:<fraction>");
  optimize_cmd->add_option("--strategies", strategies, "Comma-separated strategy kinds to enable");
  optimize_cmd->add_option("--config", config_path, "Optimizer config JSON");
  optimize_cmd->add_option("--max-cases", max_cases, "Use the first N cases (0: all)")->check(CLI::NonNegativeNumber);
  optimize_cmd->add_option("--equivalence-cases", eq_cases, "Fresh cases for the differential check");
  optimize_cmd->add_option("--cost-table", table_path, "Costs for operations the model never observed");
  optimize_cmd->add_option("--emit", emit_path, "Write the refactored source");
  optimize_cmd->add_option("--report", report_path, "Report JSON (default stdout)");
  optimize_cmd->add_option("--markdown", markdown_path, "Report as Markdown");
  optimize_cmd->callback([&] {
    const auto cp = load_program(program);
    const auto model = load_model(model_path, true);
    auto r = optimize(cp, model, load_corpus(), HotBlockPolicy::parse(policy_text), load_optimize_config(),
                      load_table(table_path));
    write_report(r);
  });

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Apply a strategy plan cumulatively and report modeled savings");
  evaluate_cmd->add_option("program", program)->required();
  evaluate_cmd->add_option("--model", model_path, "Model JSON")->required();
  evaluate_cmd->add_option("--cases", cases_path, "Cases JSON (ablations are ignored)")->required();
  evaluate_cmd->add_option("--step", plan, "Strategy spec, e.g. LoopUnroll:blit().for_1:8 (repeatable, in order)")
      ->required();
  evaluate_cmd->add_option("--config", config_path, "Optimizer config JSON");
  evaluate_cmd->add_option("--max-cases", max_cases, "Use the first N cases (0: all)")->check(CLI::NonNegativeNumber);
  evaluate_cmd->add_option("--equivalence-cases", eq_cases, "Fresh cases for the differential check");
  evaluate_cmd->add_option("--cost-table", table_path, "Costs for operations the model never observed");
  evaluate_cmd->add_option("--emit", emit_path, "Write the refactored source");
  evaluate_cmd->add_option("--report", report_path, "Report JSON (default stdout)");
  evaluate_cmd->add_option("--markdown", markdown_path, "Report as Markdown");
  evaluate_cmd->callback([&] {
    const auto cp = load_program(program);
    const auto model = load_model(model_path, true);
    std::vector<Strategy> steps;
    for (const auto& s : plan) steps.push_back(Strategy::parse(s));
    auto r = evaluate(cp, steps, model, load_corpus(), load_optimize_config(), load_table(table_path));
    write_report(r);
  });

  // pipeline
  PipelineConfig pc;
  bool no_calibration = false;
  double pipe_sigma = 0.02;
  out_dir = "enerlyze-out";
  auto* pipeline = app.add_subcommand("pipeline", "All stages end to end; writes every artifact to --out-dir");
  pipeline->add_option("--program", program, ".esrc source")->required();
  pipeline->add_option("--out-dir", out_dir, "Artifact directory");
  pipeline->add_option("--cases", pc.n_cases, "Program cases")->check(CLI::Range(2, 1000000));
  pipeline->add_option("--frames", pc.frame_budget, "Frames per case")->check(CLI::PositiveNumber);
  pipeline->add_option("--replicates", pc.replicate_count, "Measured replicates per case")->check(CLI::PositiveNumber);
  pipeline->add_option("--sigma", pipe_sigma, "Multiplicative measurement noise (0: none)")
      ->check(CLI::NonNegativeNumber);
  pipeline->add_option("--cost-table", table_path, "Ground-truth cost table JSON (default: seeded table)");
  pipeline->add_flag("--no-calibration", no_calibration, "Train on the program's cases only");
  pipeline->add_option("--calibration-cases", pc.calibration_cases, "Calibration cases")->check(CLI::PositiveNumber);
  pipeline->add_option("--k", pc.folds, "Folds")->check(CLI::Range(2, 1000));
  pipeline->add_option("--threshold", pc.threshold, "Minimum accuracy over all folds");
  pipeline->add_option("--policy", policy_text, "top:<k> or share:<fraction>");
  pipeline->add_option("--strategies", strategies, "Comma-separated strategy kinds to enable");
  pipeline->add_option("--config", config_path, "Optimizer config JSON");
  pipeline->add_option("--optimize-cases", pc.optimize_cases, "Program cases given to the optimizer (0: all)")
      ->check(CLI::NonNegativeNumber);
  pipeline->add_option("--equivalence-cases", eq_cases, "Fresh cases for the differential check");
  pipeline->add_option("--top", pc.top_n, "Blocks in the profile report")->check(CLI::PositiveNumber);
  pipeline->callback([&] {
    pc.program_name = fs::path(program).filename().string();
    pc.seed = seed;
    pc.jobs = jobs;
    pc.sim = sim_config(pipe_sigma, 30.0, seed);
    pc.table = load_table(table_path);
    pc.calibration = !no_calibration;
    pc.policy = HotBlockPolicy::parse(policy_text);
    pc.optimize = load_optimize_config();
    const auto result = run_pipeline(read_file(program), pc);
    for (const auto& [name, text] : pipeline_artifacts(result, pc)) write_file((fs::path(out_dir) / name).string(), text);
    json summary = {{"program", pc.program_name},
                    {"out_dir", out_dir},
                    {"seed", seed},
                    {"model_accepted", result.model.accepted}};
    if (result.optimized) {
      json hot = json::array();
      for (const auto& h : result.report.hot_blocks) hot.push_back(h.id);
      json applied = json::array();
      for (const auto& s : result.report.steps)
        if (s.applied) applied.push_back(s.strategy.spec());
      summary["hot_blocks"] = hot;
      summary["applied"] = applied;
      summary["total_saving_pct"] = result.report.total_saving_pct;
    }
    std::cout << dump_json(summary);
    if (!result.model.accepted) throw ModelRejected{"minimum fold accuracy is below the threshold"};
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitInput);
  } catch (const ModelRejected& e) {
    return fail("model_rejected", e.message, kExitRejected);
  } catch (const SourceError& e) {
    return fail(e.kind(), e.what(), kExitInput, &e);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), e.kind() == "internal" ? kExitInternal : kExitInput);
  } catch (const fs::filesystem_error& e) {
    return fail("io", e.what(), kExitInput);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kExitInternal);
  }
  return 0;
}
