#include "qlqg/closed_loop.hpp"

#include <cmath>
#include <limits>

#include "qlqg/csv.hpp"
#include "qlqg/parallel.hpp"

namespace qlqg {

void SimConfig::validate() const {
  grid.validate();
  require(n_traj >= 1, ErrorKind::ConfigError, "n_traj must be at least 1");
  require(record_stride >= 1 && grid.n_steps % record_stride == 0, ErrorKind::ConfigError,
          "record_stride must be positive and divide n_steps");
}

ClosedLoopPlan ClosedLoopPlan::make(const LinearCoefficients& coeffs, const CostSpec& cost,
                                    const GaussianBelief& initial, const TimeGrid& grid) {
  require(initial.mean.size() == coeffs.dim(), ErrorKind::DimensionMismatch, "initial mean must have m entries");
  ClosedLoopPlan plan;
  plan.coeffs = coeffs;
  plan.cost = cost;
  plan.initial = GaussianBelief{initial.mean, symmetrized(initial.cov)};
  plan.sigma = integrate_filter_riccati(coeffs, plan.initial.cov, grid);
  plan.omega = integrate_control_riccati(coeffs, cost, grid);
  plan.gains = control_gain_path(plan.omega, coeffs, cost);
  return plan;
}

double ClosedLoopPlan::analytic_cost() const {
  return total_minimal_cost(initial.mean, initial.cov, omega, sigma, coeffs, cost);
}

double running_posterior_cost(const Vec& xhat, const Mat& sigma, const Vec& u, const CostSpec& cost) {
  return xhat.dot(cost.F * xhat) + (cost.F.cwiseProduct(sigma)).sum() + 2.0 * u.dot(cost.G * xhat) + u.squaredNorm();
}

namespace {

/// Per-step quantities shared by every trajectory.
struct StepTables {
  std::vector<Mat> transition;  // I + (A - B L_k) dt
  std::vector<Mat> filter_gain; // Sigma_k C^T + M
  std::vector<Mat> cost_form;   // F - L^T G - G^T L + L^T L
  std::vector<double> cov_cost; // Tr[F Sigma_k]
  double terminal_cov_cost = 0.0;
};

StepTables build_tables(const ClosedLoopPlan& plan, double h) {
  const LinearCoefficients& c = plan.coeffs;
  const Index m = c.dim();
  const auto n = plan.sigma.values.size();
  StepTables t;
  t.transition.reserve(n);
  t.filter_gain.reserve(n);
  t.cost_form.reserve(n);
  t.cov_cost.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Mat& L = plan.gains.gains[k];
    t.transition.push_back(Mat::Identity(m, m) + (c.A - c.B * L) * h);
    t.filter_gain.push_back(filter_gain(plan.sigma.values[k], c));
    t.cost_form.push_back(
        symmetrized(plan.cost.F - L.transpose() * plan.cost.G - plan.cost.G.transpose() * L + L.transpose() * L));
    t.cov_cost.push_back((plan.cost.F.cwiseProduct(plan.sigma.values[k])).sum());
  }
  t.terminal_cov_cost = (plan.cost.Omega_T.cwiseProduct(plan.sigma.back())).sum();
  return t;
}

void check_plan(const ClosedLoopPlan& plan, const SimConfig& config) {
  config.validate();
  require(plan.sigma.grid == config.grid && plan.omega.grid == config.grid && plan.gains.grid == config.grid,
          ErrorKind::GridMismatch, "plan paths must be computed on the simulation grid");
  const auto n = static_cast<std::size_t>(config.grid.size());
  require(plan.sigma.values.size() == n && plan.gains.gains.size() == n, ErrorKind::GridMismatch,
          "plan paths do not cover the grid");
  const LinearCoefficients& c = plan.coeffs;
  for (const Mat& L : plan.gains.gains)
    require(L.rows() == c.controls() && L.cols() == c.dim(), ErrorKind::DimensionMismatch, "gain must be k x m");
  require(plan.initial.mean.size() == c.dim(), ErrorKind::DimensionMismatch, "initial mean must have m entries");
}

}  // namespace

Ensemble simulate_closed_loop(const ClosedLoopPlan& plan, const SimConfig& config) {
  check_plan(plan, config);
  const LinearCoefficients& c = plan.coeffs;
  const TimeGrid& grid = config.grid;
  const double h = grid.dt();
  const double sqrt_h = std::sqrt(h);
  const Index m = c.dim();
  const Index d = c.channels();
  const Index k_in = c.controls();
  const StepTables tables = build_tables(plan, h);
  const Mat& omega_T = plan.cost.Omega_T;

  Ensemble out;
  out.config = config;
  const auto n_traj = static_cast<std::size_t>(config.n_traj);
  out.total_costs.assign(n_traj, 0.0);
  if (config.keep_records) out.trajectories.resize(n_traj);

  parallel_for(n_traj, thread_count(config.threads), [&](std::size_t traj) {
    NormalStream normal(config.seed, traj);
    Vec x = plan.initial.mean;
    Vec next(m), tmp(m), u(k_in), dyt = Vec::Zero(d), dy = Vec::Zero(d);
    TrajectoryRecord* rec = config.keep_records ? &out.trajectories[traj] : nullptr;
    auto record = [&](int k, double acc) {
      if (!rec || k % config.record_stride != 0) return;
      rec->times.push_back(grid.time(k));
      rec->means.push_back(x);
      rec->controls.push_back(optimal_control(plan.gains.at(k), x));
      rec->increments.push_back(dy);
      rec->innovations.push_back(dyt);
      rec->running_cost.push_back(acc);
    };

    double acc = 0.0;
    tmp.noalias() = tables.cost_form[0] * x;
    double prev_cost = x.dot(tmp) + tables.cov_cost[0];
    record(0, acc);
    for (int k = 0; k < grid.n_steps; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      for (Index i = 0; i < d; ++i) dyt(i) = config.zero_noise ? 0.0 : sqrt_h * normal();
      if (rec) {
        dy.noalias() = c.C * x;
        dy = dy * h + dyt;
      }
      next.noalias() = tables.transition[ks] * x;
      next.noalias() += tables.filter_gain[ks] * dyt;
      x.swap(next);
      tmp.noalias() = tables.cost_form[ks + 1] * x;
      const double cost_now = x.dot(tmp) + tables.cov_cost[ks + 1];
      acc += 0.5 * h * (prev_cost + cost_now);
      prev_cost = cost_now;
      record(k + 1, acc);
    }
    if (!x.allFinite()) throw Error(ErrorKind::NonFinite, "closed-loop mean became non-finite");
    tmp.noalias() = omega_T * x;
    const double total = acc + x.dot(tmp) + tables.terminal_cov_cost;
    out.total_costs[traj] = total;
    if (rec) rec->total_cost = total;
  });
  return out;
}

Ensemble simulate_closed_loop(const PhaseSpaceModel& model, const CostSpec& cost, const GaussianBelief& initial,
                              const SimConfig& config) {
  config.validate();
  const ClosedLoopPlan plan = ClosedLoopPlan::make(build_coefficients(model), cost, initial, config.grid);
  return simulate_closed_loop(plan, config);
}

namespace {

CostEstimate welford(const std::vector<double>& xs) {
  require(!xs.empty(), ErrorKind::EmptyEnsemble, "ensemble has no trajectories");
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  CostEstimate e;
  e.mean = mean;
  e.n = n;
  e.std_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n))
                      : std::numeric_limits<double>::quiet_NaN();
  return e;
}

}  // namespace

CostEstimate monte_carlo_expected_cost(const Ensemble& ensemble) { return welford(ensemble.total_costs); }

CostEstimate paired_cost_difference(const Ensemble& a, const Ensemble& b) {
  require(a.total_costs.size() == b.total_costs.size(), ErrorKind::ConfigError,
          "paired comparison needs ensembles of equal size");
  require(a.config.seed == b.config.seed, ErrorKind::ConfigError, "paired comparison needs a common seed");
  std::vector<double> diff(a.total_costs.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = b.total_costs[i] - a.total_costs[i];
  return welford(diff);
}

std::string trajectory_csv(const TrajectoryRecord& r) {
  std::string out = "t";
  const Index m = r.means.empty() ? 0 : r.means.front().size();
  const Index k = r.controls.empty() ? 0 : r.controls.front().size();
  const Index d = r.innovations.empty() ? 0 : r.innovations.front().size();
  for (Index i = 0; i < m; ++i) out += ",X_" + std::to_string(i);
  for (Index i = 0; i < k; ++i) out += ",u_" + std::to_string(i);
  for (Index i = 0; i < d; ++i) out += ",dY_" + std::to_string(i);
  for (Index i = 0; i < d; ++i) out += ",dYt_" + std::to_string(i);
  out += ",cost\n";
  std::vector<double> row;
  for (std::size_t j = 0; j < r.times.size(); ++j) {
    row.assign(1, r.times[j]);
    for (const Vec* v : {&r.means[j], &r.controls[j], &r.increments[j], &r.innovations[j]})
      row.insert(row.end(), v->data(), v->data() + v->size());
    row.push_back(r.running_cost[j]);
    out += csv_row(row);
  }
  return out;
}

}  // namespace qlqg
