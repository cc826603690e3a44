#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "enerlyze/blocks.hpp"
#include "enerlyze/energy.hpp"

namespace enerlyze {

struct DatasetRow {
  std::string case_id;
  OpCountVector op_counts;  // over op_universe()
  double net_J = 0.0;
};

struct Dataset {
  std::vector<DatasetRow> rows;
};

/// Joins logs and case energies by case id. Failed logs are rejected.
Dataset make_dataset(const std::vector<ExecutionLog>& logs, const OperationDictionary& dict,
                     const std::vector<CaseEnergy>& energies);

nlohmann::json dataset_to_json(const Dataset& d);
Dataset dataset_from_json(const nlohmann::json& j);

/// N (m x l, row-major, l = |op_universe|) and e in microjoules.
struct DesignMatrix {
  int m = 0;
  int l = 0;
  std::vector<double> n;
  std::vector<double> e_uJ;

  double at(int i, int j) const { return n[static_cast<std::size_t>(i) * l + j]; }
};

DesignMatrix assemble(const Dataset& d);

struct FitConfig {
  /// Gradient step relative to 1/L (L = largest eigenvalue of the scaled
  /// normal matrix); 1 is the largest step with guaranteed descent.
  double step = 1.0;
  int max_iterations = 20000;
  /// Stops when the projected-gradient norm falls below tol times its
  /// initial value.
  double tol = 1e-12;
  int restarts = 5;
  std::uint64_t seed = 42;
  /// Pairwise column correlation above which ops are reported as a group.
  double corr_threshold = 0.97;
  /// Refines the best iterate with an active-set least-squares step.
  bool polish = true;
};

struct FitResult {
  std::vector<double> cost_uJ;  // over op_universe(), all >= 0
  std::string solver;
  int iterations = 0;           // of the best restart
  double residual = 0.0;        // ||N c - e||_2 in microjoules
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Non-negative least squares: min ||N c - e||^2 subject to c >= 0, by
/// projected gradient with momentum from seeded restarts.
FitResult fit(const DesignMatrix& d, const FitConfig& cfg = {});

/// (1/n) sum |(pred - meas) / meas|. Throws for a zero measurement.
double nmae(const std::vector<double>& pred, const std::vector<double>& meas);
/// Sample Pearson correlation. Throws for n < 2 or zero variance.
double pearson_r(const std::vector<double>& pred, const std::vector<double>& meas);

struct FoldMetrics {
  int fold_index = 0;
  double r_train = 0.0;
  double r_valid = 0.0;
  double nmae_train = 0.0;
  double nmae_valid = 0.0;
};

struct FoldResult {
  FoldMetrics metrics;
  FitResult fit;
  std::vector<int> valid_rows;
};

/// Seeded even split of the rows into k folds; fits on k - 1 of them and
/// validates on the held-out one, k times.
std::vector<FoldResult> cross_validate(const Dataset& d, int k, const FitConfig& cfg = {});

/// Ops whose columns are strongly correlated. Only the weighted sum
/// sum_j weight_j * cost_j is meaningful when `split_identifiable` is false;
/// weights are column sums relative to the first member.
struct OpGroup {
  std::vector<int> ops;
  std::vector<double> weights;
  bool split_identifiable = true;
  bool sum_identifiable = true;
};

struct ColumnAnalysis {
  std::vector<bool> observed;      // column has a nonzero entry
  std::vector<bool> identifiable;  // cost is determined by the data
  std::vector<OpGroup> groups;
};

ColumnAnalysis analyze_columns(const DesignMatrix& d, double corr_threshold = 0.97);
double group_sum(const OpGroup& g, const std::vector<double>& cost_uJ);

struct EnergyModel {
  std::vector<double> cost_uJ;  // over op_universe()
  double idle_power_W = 0.0;
  FitResult fit_meta;
  FitConfig config;
  std::vector<FoldMetrics> folds;
  int best_fold = -1;
  double threshold = 0.85;
  bool accepted = false;
  ColumnAnalysis columns;

  double cost(std::string_view op) const;
  /// Ops with a nonzero column in the training data.
  bool observed(int op) const;
};

/// accuracy := 1 - nmae. Accepted iff the minimum accuracy over all folds,
/// train and validation, is at least `threshold`. Costs come from the fold
/// with the best validation accuracy (lowest index on ties).
EnergyModel select_model(const std::vector<FoldResult>& folds, double threshold = 0.85);

/// cross_validate + select_model + analyze_columns on the full dataset.
EnergyModel build_model(const Dataset& d, int k = 4, double threshold = 0.85, const FitConfig& cfg = {});

nlohmann::json model_to_json(const EnergyModel& m);
EnergyModel model_from_json(const nlohmann::json& j);

/// A model whose costs are the table's, accepted and fully observed; used to
/// account with ground truth.
EnergyModel oracle_model(const CostTable& table);

/// Mean power of idle traces, for recording the idle baseline in the model.
double mean_idle_power(const std::vector<PowerTrace>& idle);

}  // namespace enerlyze
