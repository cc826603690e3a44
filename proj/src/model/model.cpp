#include "enerlyze/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "enerlyze/random.hpp"

namespace enerlyze {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<int> observed_columns(const DesignMatrix& d) {
  std::vector<int> cols;
  for (int j = 0; j < d.l; ++j)
    for (int i = 0; i < d.m; ++i)
      if (d.at(i, j) != 0.0) {
        cols.push_back(j);
        break;
      }
  return cols;
}

// Observed columns scaled to unit 2-norm. Positive column scaling maps the
// non-negative orthant onto itself, so the NNLS solution carries over.
struct Scaled {
  std::vector<int> cols;
  VectorXd scale;
  MatrixXd b;
  VectorXd e;
};

Scaled scaled_problem(const DesignMatrix& d) {
  Scaled s;
  s.cols = observed_columns(d);
  const int p = static_cast<int>(s.cols.size());
  s.b.resize(d.m, p);
  s.scale.resize(p);
  s.e.resize(d.m);
  for (int i = 0; i < d.m; ++i) s.e(i) = d.e_uJ[static_cast<std::size_t>(i)];
  for (int k = 0; k < p; ++k) {
    for (int i = 0; i < d.m; ++i) s.b(i, k) = d.at(i, s.cols[static_cast<std::size_t>(k)]);
    s.scale(k) = s.b.col(k).norm();
    s.b.col(k) /= s.scale(k);
  }
  return s;
}

struct Quadratic {
  MatrixXd g;  // B^T B
  VectorXd b;  // B^T e
  double ee = 0.0;

  // 0.5 * ||B y - e||^2
  double objective(const VectorXd& y) const { return std::max(0.0, 0.5 * y.dot(g * y) - b.dot(y) + 0.5 * ee); }
};

double projected_gradient_norm(const VectorXd& y, const VectorXd& grad) {
  double s = 0.0;
  for (int j = 0; j < y.size(); ++j) {
    const double pg = y(j) > 0.0 ? grad(j) : std::min(grad(j), 0.0);
    s += pg * pg;
  }
  return std::sqrt(s);
}

struct PgRun {
  VectorXd y;
  int iterations = 0;
  bool converged = false;
};

// FISTA with gradient-based adaptive restart, projecting onto y >= 0.
PgRun projected_gradient(const Quadratic& q, VectorXd y, double step, int max_iter, double stop) {
  PgRun r;
  VectorXd z = y;
  double t = 1.0;
  for (int k = 1; k <= max_iter; ++k) {
    const VectorXd grad = q.g * z - q.b;
    VectorXd next = (z - step * grad).cwiseMax(0.0);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if ((z - next).dot(next - y) > 0.0) {
      z = next;
      t = 1.0;
    } else {
      z = next + ((t - 1.0) / t_next) * (next - y);
      t = t_next;
    }
    y = std::move(next);
    r.iterations = k;
    if (k % 10 == 0 && projected_gradient_norm(y, q.g * y - q.b) <= stop) {
      r.converged = true;
      break;
    }
  }
  r.y = std::move(y);
  return r;
}

// Active-set refinement warm-started from a projected-gradient iterate:
// corrects the free variables by a minimum-norm least-squares step, so
// directions the data cannot determine stay where they were.
bool polish(const Scaled& s, const Quadratic& q, VectorXd& y, double kkt_tol) {
  const int p = static_cast<int>(y.size());
  std::vector<bool> free(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) free[static_cast<std::size_t>(j)] = y(j) > 0.0;
  for (int round = 0; round < 3 * p + 10; ++round) {
    std::vector<int> idx;
    for (int j = 0; j < p; ++j)
      if (free[static_cast<std::size_t>(j)]) idx.push_back(j);
    if (!idx.empty()) {
      const int n = static_cast<int>(idx.size());
      MatrixXd bp(s.b.rows(), n);
      VectorXd yp(n);
      for (int k = 0; k < n; ++k) {
        bp.col(k) = s.b.col(idx[static_cast<std::size_t>(k)]);
        yp(k) = y(idx[static_cast<std::size_t>(k)]);
      }
      const VectorXd resid = s.e - s.b * y;
      const VectorXd z = yp + bp.completeOrthogonalDecomposition().solve(resid);
      double alpha = 1.0;
      for (int k = 0; k < n; ++k)
        if (z(k) < 0.0) alpha = std::min(alpha, yp(k) / (yp(k) - z(k)));
      for (int k = 0; k < n; ++k) {
        const int j = idx[static_cast<std::size_t>(k)];
        y(j) = std::max(0.0, yp(k) + alpha * (z(k) - yp(k)));
        if (alpha < 1.0 && y(j) <= 0.0) {
          y(j) = 0.0;
          free[static_cast<std::size_t>(j)] = false;
        }
      }
      if (alpha < 1.0) continue;
    }
    const VectorXd grad = q.g * y - q.b;
    int enter = -1;
    for (int j = 0; j < p; ++j)
      if (!free[static_cast<std::size_t>(j)] && grad(j) < -kkt_tol && (enter < 0 || grad(j) < grad(enter))) enter = j;
    if (enter < 0) return true;
    free[static_cast<std::size_t>(enter)] = true;
  }
  return false;
}

std::vector<double> predict(const DesignMatrix& d, const std::vector<double>& c) {
  std::vector<double> out(static_cast<std::size_t>(d.m), 0.0);
  for (int i = 0; i < d.m; ++i) {
    double s = 0.0;
    for (int j = 0; j < d.l; ++j) s += d.at(i, j) * c[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

DesignMatrix subset(const DesignMatrix& d, const std::vector<int>& rows) {
  DesignMatrix s;
  s.m = static_cast<int>(rows.size());
  s.l = d.l;
  s.n.reserve(rows.size() * static_cast<std::size_t>(d.l));
  for (int i : rows) {
    const auto begin = d.n.begin() + static_cast<std::ptrdiff_t>(i) * d.l;
    s.n.insert(s.n.end(), begin, begin + d.l);
    s.e_uJ.push_back(d.e_uJ[static_cast<std::size_t>(i)]);
  }
  return s;
}

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    x = parent[static_cast<std::size_t>(x)];
  }
  return x;
}

}  // namespace

Dataset make_dataset(const std::vector<ExecutionLog>& logs, const OperationDictionary& dict,
                     const std::vector<CaseEnergy>& energies) {
  std::map<std::string, const CaseEnergy*> by_id;
  for (const auto& e : energies) by_id[e.case_id] = &e;
  Dataset d;
  for (const auto& log : logs) {
    if (log.failed) throw Error("input", "case " + log.case_id + " failed: " + log.error);
    const auto it = by_id.find(log.case_id);
    if (it == by_id.end()) throw Error("input", "no energy measured for case " + log.case_id);
    d.rows.push_back({log.case_id, total_op_counts(log.block_ids, log.block_counts, dict), it->second->net_J});
  }
  return d;
}

nlohmann::json dataset_to_json(const Dataset& d) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : d.rows)
    rows.push_back({{"case_id", r.case_id}, {"net_J", r.net_J}, {"op_counts", op_counts_to_json(r.op_counts)}});
  return rows;
}

Dataset dataset_from_json(const nlohmann::json& j) {
  try {
    Dataset d;
    for (const auto& r : j)
      d.rows.push_back(
          {r.at("case_id").get<std::string>(), op_counts_from_json(r.at("op_counts")), r.at("net_J").get<double>()});
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error("input", std::string("malformed dataset: ") + e.what());
  }
}

DesignMatrix assemble(const Dataset& d) {
  if (d.rows.empty()) throw Error("input", "dataset has no rows");
  DesignMatrix m;
  m.m = static_cast<int>(d.rows.size());
  m.l = static_cast<int>(op_universe().size());
  m.n.reserve(static_cast<std::size_t>(m.m) * static_cast<std::size_t>(m.l));
  for (const auto& r : d.rows) {
    if (r.op_counts.size() != static_cast<std::size_t>(m.l))
      throw Error("input", "case " + r.case_id + " uses a different operation universe");
    if (!std::isfinite(r.net_J)) throw Error("input", "net energy of case " + r.case_id + " is not finite");
    for (auto c : r.op_counts) m.n.push_back(static_cast<double>(c));
    m.e_uJ.push_back(r.net_J * 1e6);
  }
  return m;
}

FitResult fit(const DesignMatrix& d, const FitConfig& cfg) {
  if (d.m < 1) throw Error("input", "cannot fit an empty dataset");
  if (cfg.restarts < 1 || cfg.max_iterations < 1 || !(cfg.step > 0.0) || cfg.step > 1.0)
    throw Error("input", "invalid solver configuration");
  FitResult out;
  out.solver = "projected-gradient";
  out.cost_uJ.assign(static_cast<std::size_t>(d.l), 0.0);
  const Scaled s = scaled_problem(d);
  const int p = static_cast<int>(s.cols.size());
  if (p == 0) {
    out.converged = true;
    out.residual = s.e.norm();
    return out;
  }
  Quadratic q;
  q.g = s.b.transpose() * s.b;
  q.b = s.b.transpose() * s.e;
  q.ee = s.e.squaredNorm();
  const double lipschitz =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(q.g, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = cfg.step / lipschitz;
  const double stop = cfg.tol * std::max(q.b.norm(), std::numeric_limits<double>::min());

  // Restart 0 starts at the best multiple of the all-ones vector, the others
  // at seeded random points around it.
  const VectorXd ones = VectorXd::Ones(p);
  const double base =
      std::max(0.0, q.b.sum()) / std::max(ones.dot(q.g * ones), std::numeric_limits<double>::min());
  PgRun best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    VectorXd y0 = base * ones;
    if (r > 0) {
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(r)));
      for (int j = 0; j < p; ++j) y0(j) = 2.0 * base * rng.uniform();
    }
    auto run = projected_gradient(q, y0, step, cfg.max_iterations, stop);
    const double obj = q.objective(run.y);
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(run);
    }
  }
  VectorXd y = best.y;
  out.iterations = best.iterations;
  out.converged = best.converged;
  if (cfg.polish) {
    VectorXd refined = y;
    const bool kkt = polish(s, q, refined, 1e-10 * std::max(1.0, q.b.norm()));
    if (q.objective(refined) <= best_obj * (1.0 + 1e-12)) {
      y = refined;
      out.solver = "projected-gradient+active-set";
      out.converged = out.converged || kkt;
    }
  }
  if (!out.converged)
    out.warnings.push_back("projected gradient did not converge in " + std::to_string(cfg.max_iterations) +
                           " iterations; returning the best iterate");
  for (int k = 0; k < p; ++k)
    out.cost_uJ[static_cast<std::size_t>(s.cols[static_cast<std::size_t>(k)])] = std::max(0.0, y(k) / s.scale(k));
  const auto pred = predict(d, out.cost_uJ);
  double r2 = 0.0;
  for (int i = 0; i < d.m; ++i) {
    const double diff = pred[static_cast<std::size_t>(i)] - d.e_uJ[static_cast<std::size_t>(i)];
    r2 += diff * diff;
  }
  out.residual = std::sqrt(r2);
  return out;
}

double nmae(const std::vector<double>& pred, const std::vector<double>& meas) {
  if (pred.size() != meas.size() || pred.empty()) throw Error("input", "nmae needs equally sized, non-empty inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (meas[i] == 0.0) throw Error("input", "nmae is undefined for a zero measurement");
    s += std::abs((pred[i] - meas[i]) / meas[i]);
  }
  return s / static_cast<double>(pred.size());
}

double pearson_r(const std::vector<double>& pred, const std::vector<double>& meas) {
  if (pred.size() != meas.size() || pred.size() < 2)
    throw Error("input", "correlation needs at least two paired values");
  const double n = static_cast<double>(pred.size());
  const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  const double mm = std::accumulate(meas.begin(), meas.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sxy += (pred[i] - mp) * (meas[i] - mm);
    sxx += (pred[i] - mp) * (pred[i] - mp);
    syy += (meas[i] - mm) * (meas[i] - mm);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error("input", "correlation is undefined for zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<FoldResult> cross_validate(const Dataset& d, int k, const FitConfig& cfg) {
  if (k < 2) throw Error("input", "cross validation needs at least two folds");
  const auto all = assemble(d);
  if (all.m < k)
    throw Error("input", "cannot split " + std::to_string(all.m) + " cases into " + std::to_string(k) + " folds");
  std::vector<int> order(static_cast<std::size_t>(all.m));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(cfg.seed, 0xf01d));
  rng.shuffle(order.begin(), order.end());
  std::vector<FoldResult> out;
  for (int f = 0; f < k; ++f) {
    std::vector<int> train, valid;
    for (int p = 0; p < all.m; ++p) (p % k == f ? valid : train).push_back(order[static_cast<std::size_t>(p)]);
    std::sort(train.begin(), train.end());
    std::sort(valid.begin(), valid.end());
    const auto dt = subset(all, train);
    const auto dv = subset(all, valid);
    FoldResult r;
    r.fit = fit(dt, cfg);
    r.valid_rows = valid;
    r.metrics.fold_index = f;
    const auto pt = predict(dt, r.fit.cost_uJ);
    const auto pv = predict(dv, r.fit.cost_uJ);
    r.metrics.nmae_train = nmae(pt, dt.e_uJ);
    r.metrics.nmae_valid = nmae(pv, dv.e_uJ);
    r.metrics.r_train = pearson_r(pt, dt.e_uJ);
    r.metrics.r_valid = pearson_r(pv, dv.e_uJ);
    out.push_back(std::move(r));
  }
  return out;
}

ColumnAnalysis analyze_columns(const DesignMatrix& d, double corr_threshold) {
  ColumnAnalysis a;
  a.observed.assign(static_cast<std::size_t>(d.l), false);
  a.identifiable.assign(static_cast<std::size_t>(d.l), false);
  const Scaled s = scaled_problem(d);
  const int p = static_cast<int>(s.cols.size());
  for (int c : s.cols) a.observed[static_cast<std::size_t>(c)] = true;
  if (p == 0) return a;

  Eigen::JacobiSVD<MatrixXd> svd(s.b, Eigen::ComputeFullV);
  const VectorXd sv = svd.singularValues();
  int rank = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) > 1e-9 * sv(0)) ++rank;
  const MatrixXd null = svd.matrixV().rightCols(p - rank);
  for (int k = 0; k < p; ++k)
    a.identifiable[static_cast<std::size_t>(s.cols[static_cast<std::size_t>(k)])] =
        null.cols() == 0 || null.row(k).norm() < 1e-6;

  // Correlation groups. Constant nonzero columns are proportional to each
  // other, so they form a group of their own.
  const MatrixXd centered = s.b.rowwise() - s.b.colwise().mean();
  VectorXd sd(p);
  for (int k = 0; k < p; ++k) sd(k) = centered.col(k).norm();
  std::vector<int> parent(static_cast<std::size_t>(p));
  std::iota(parent.begin(), parent.end(), 0);
  for (int x = 0; x < p; ++x)
    for (int y = x + 1; y < p; ++y) {
      const bool flat_x = sd(x) <= 1e-12;
      const bool flat_y = sd(y) <= 1e-12;
      bool join = false;
      if (flat_x || flat_y)
        join = flat_x && flat_y;
      else
        join = centered.col(x).dot(centered.col(y)) / (sd(x) * sd(y)) > corr_threshold;
      if (join) parent[static_cast<std::size_t>(find_root(parent, y))] = find_root(parent, x);
    }
  std::map<int, std::vector<int>> members;
  for (int k = 0; k < p; ++k) members[find_root(parent, k)].push_back(k);
  for (const auto& [root, ks] : members) {
    if (ks.size() < 2) continue;
    OpGroup g;
    double ref = 0.0;
    for (int i = 0; i < d.m; ++i) ref += std::abs(d.at(i, s.cols[static_cast<std::size_t>(ks[0])]));
    VectorXd w_scaled = VectorXd::Zero(p);
    for (int k : ks) {
      const int col = s.cols[static_cast<std::size_t>(k)];
      double sum = 0.0;
      for (int i = 0; i < d.m; ++i) sum += std::abs(d.at(i, col));
      g.ops.push_back(col);
      g.weights.push_back(sum / ref);
      g.split_identifiable = g.split_identifiable && a.identifiable[static_cast<std::size_t>(col)];
      w_scaled(k) = (sum / ref) / s.scale(k);
    }
    g.sum_identifiable = null.cols() == 0 || (null.transpose() * w_scaled).norm() <= 1e-6 * w_scaled.norm();
    a.groups.push_back(std::move(g));
  }
  std::sort(a.groups.begin(), a.groups.end(), [](const OpGroup& x, const OpGroup& y) { return x.ops[0] < y.ops[0]; });
  return a;
}

double group_sum(const OpGroup& g, const std::vector<double>& cost_uJ) {
  double s = 0.0;
  for (std::size_t k = 0; k < g.ops.size(); ++k) s += g.weights[k] * cost_uJ.at(static_cast<std::size_t>(g.ops[k]));
  return s;
}

double EnergyModel::cost(std::string_view op) const { return cost_uJ.at(static_cast<std::size_t>(op_id(op))); }

bool EnergyModel::observed(int op) const {
  return op >= 0 && static_cast<std::size_t>(op) < columns.observed.size() &&
         columns.observed[static_cast<std::size_t>(op)];
}

EnergyModel select_model(const std::vector<FoldResult>& folds, double threshold) {
  if (folds.empty()) throw Error("input", "model selection needs at least one fold");
  EnergyModel m;
  m.threshold = threshold;
  double worst = std::numeric_limits<double>::infinity();
  double best_valid = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fm = folds[f].metrics;
    m.folds.push_back(fm);
    worst = std::min({worst, 1.0 - fm.nmae_train, 1.0 - fm.nmae_valid});
    if (1.0 - fm.nmae_valid > best_valid) {
      best_valid = 1.0 - fm.nmae_valid;
      m.best_fold = static_cast<int>(f);
    }
  }
  m.accepted = worst >= threshold;
  m.fit_meta = folds[static_cast<std::size_t>(m.best_fold)].fit;
  m.cost_uJ = m.fit_meta.cost_uJ;
  return m;
}

EnergyModel build_model(const Dataset& d, int k, double threshold, const FitConfig& cfg) {
  auto m = select_model(cross_validate(d, k, cfg), threshold);
  m.config = cfg;
  m.columns = analyze_columns(assemble(d), cfg.corr_threshold);
  return m;
}

EnergyModel oracle_model(const CostTable& table) {
  EnergyModel m;
  m.cost_uJ = table.cost_uJ;
  m.idle_power_W = table.idle_power_W;
  m.fit_meta.solver = "ground-truth";
  m.fit_meta.cost_uJ = table.cost_uJ;
  m.fit_meta.converged = true;
  m.accepted = true;
  m.columns.observed.assign(table.cost_uJ.size(), true);
  m.columns.identifiable.assign(table.cost_uJ.size(), true);
  return m;
}

double mean_idle_power(const std::vector<PowerTrace>& idle) {
  double e = 0.0, t = 0.0;
  for (const auto& tr : idle) {
    e += integrate(tr);
    t += trace_duration(tr);
  }
  if (!(t > 0.0)) throw Error("input", "no idle traces");
  return e / t;
}

nlohmann::json model_to_json(const EnergyModel& m) {
  const auto ops = op_universe();
  nlohmann::json costs = nlohmann::json::object();
  for (std::size_t j = 0; j < ops.size(); ++j) costs[ops[j].name] = m.cost_uJ.at(j);
  nlohmann::json observed = nlohmann::json::array();
  nlohmann::json unidentifiable = nlohmann::json::array();
  for (std::size_t j = 0; j < m.columns.observed.size(); ++j) {
    if (!m.columns.observed[j]) continue;
    observed.push_back(ops[j].name);
    if (!m.columns.identifiable[j]) unidentifiable.push_back(ops[j].name);
  }
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : m.columns.groups) {
    nlohmann::json names = nlohmann::json::array();
    for (int op : g.ops) names.push_back(ops[static_cast<std::size_t>(op)].name);
    groups.push_back({{"ops", names},
                      {"weights", g.weights},
                      {"split_identifiable", g.split_identifiable},
                      {"sum_identifiable", g.sum_identifiable},
                      {"sum_uJ", group_sum(g, m.cost_uJ)}});
  }
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : m.folds)
    folds.push_back({{"fold", f.fold_index},
                     {"r_train", f.r_train},
                     {"r_valid", f.r_valid},
                     {"nmae_train", f.nmae_train},
                     {"nmae_valid", f.nmae_valid}});
  return {{"cost_uJ", costs},
          {"idle_power_W", m.idle_power_W},
          {"accepted", m.accepted},
          {"threshold", m.threshold},
          {"best_fold", m.best_fold},
          {"seed", m.config.seed},
          {"solver",
           {{"step", m.config.step},
            {"max_iterations", m.config.max_iterations},
            {"tol", m.config.tol},
            {"restarts", m.config.restarts},
            {"corr_threshold", m.config.corr_threshold},
            {"polish", m.config.polish}}},
          {"fit",
           {{"solver", m.fit_meta.solver},
            {"iterations", m.fit_meta.iterations},
            {"residual_uJ", m.fit_meta.residual},
            {"converged", m.fit_meta.converged},
            {"warnings", m.fit_meta.warnings}}},
          {"folds", folds},
          {"observed", observed},
          {"unidentifiable", unidentifiable},
          {"groups", groups}};
}

EnergyModel model_from_json(const nlohmann::json& j) {
  try {
    EnergyModel m;
    const auto ops = op_universe();
    m.cost_uJ.assign(ops.size(), 0.0);
    for (const auto& [name, v] : j.at("cost_uJ").items()) {
      const auto id = find_op(name);
      if (!id) throw Error("input", "model names unknown operation " + name);
      m.cost_uJ[static_cast<std::size_t>(*id)] = v.get<double>();
    }
    for (double c : m.cost_uJ)
      if (!(c >= 0.0)) throw Error("input", "model costs must be non-negative");
    m.idle_power_W = j.value("idle_power_W", 0.0);
    m.accepted = j.at("accepted").get<bool>();
    m.threshold = j.value("threshold", 0.85);
    m.best_fold = j.value("best_fold", -1);
    m.config.seed = j.value("seed", std::uint64_t{42});
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      m.config.step = s.value("step", m.config.step);
      m.config.max_iterations = s.value("max_iterations", m.config.max_iterations);
      m.config.tol = s.value("tol", m.config.tol);
      m.config.restarts = s.value("restarts", m.config.restarts);
      m.config.corr_threshold = s.value("corr_threshold", m.config.corr_threshold);
      m.config.polish = s.value("polish", m.config.polish);
    }
    m.fit_meta.cost_uJ = m.cost_uJ;
    if (j.contains("fit")) {
      const auto& f = j.at("fit");
      m.fit_meta.solver = f.value("solver", "");
      m.fit_meta.iterations = f.value("iterations", 0);
      m.fit_meta.residual = f.value("residual_uJ", 0.0);
      m.fit_meta.converged = f.value("converged", false);
      m.fit_meta.warnings = f.value("warnings", std::vector<std::string>{});
    }
    for (const auto& f : j.value("folds", nlohmann::json::array()))
      m.folds.push_back({f.at("fold").get<int>(), f.at("r_train").get<double>(), f.at("r_valid").get<double>(),
                         f.at("nmae_train").get<double>(), f.at("nmae_valid").get<double>()});
    m.columns.observed.assign(ops.size(), false);
    m.columns.identifiable.assign(ops.size(), false);
    for (const auto& name : j.value("observed", nlohmann::json::array())) {
      const auto id = static_cast<std::size_t>(op_id(name.get<std::string>()));
      m.columns.observed[id] = true;
      m.columns.identifiable[id] = true;
    }
    for (const auto& name : j.value("unidentifiable", nlohmann::json::array()))
      m.columns.identifiable[static_cast<std::size_t>(op_id(name.get<std::string>()))] = false;
    for (const auto& g : j.value("groups", nlohmann::json::array())) {
      OpGroup og;
      for (const auto& name : g.at("ops")) og.ops.push_back(op_id(name.get<std::string>()));
      og.weights = g.at("weights").get<std::vector<double>>();
      if (og.weights.size() != og.ops.size()) throw Error("input", "group weights do not match its operations");
      og.split_identifiable = g.value("split_identifiable", false);
      og.sum_identifiable = g.value("sum_identifiable", true);
      m.columns.groups.push_back(std::move(og));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error("input", std::string("malformed model: ") + e.what());
  }
}

}  // namespace enerlyze
