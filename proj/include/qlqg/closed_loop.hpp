#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qlqg/kalman_filter.hpp"
#include "qlqg/lqg_controller.hpp"

namespace qlqg {

struct SimConfig {
  TimeGrid grid;
  int n_traj = 1;
  std::uint64_t seed = 0;
  /// Record every `record_stride`-th grid point; must divide n_steps.
  int record_stride = 1;
  /// Test hook: replace every innovation draw by zero.
  bool zero_noise = false;
  /// Worker threads (0: hardware concurrency). Results do not depend on it.
  int threads = 1;
  /// Keep per-trajectory records (otherwise only total costs are stored).
  bool keep_records = true;

  void validate() const;
};

/// Realisation of the innovations-driven closed loop. Entry j corresponds to
/// grid index j * record_stride; `increments` and `innovations` hold the
/// measurement and innovation increments of the step ending there (zero at t0).
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Vec> means;
  std::vector<Vec> controls;
  std::vector<Vec> increments;
  std::vector<Vec> innovations;
  std::vector<double> running_cost;
  double total_cost = 0.0;
};

/// Everything the simulator needs, with the deterministic Riccati paths
/// precomputed on the simulation grid.
struct ClosedLoopPlan {
  LinearCoefficients coeffs;
  CostSpec cost;
  GaussianBelief initial;
  MatrixPath sigma;
  MatrixPath omega;
  ControlGainPath gains;

  static ClosedLoopPlan make(const LinearCoefficients& coeffs, const CostSpec& cost, const GaussianBelief& initial,
                             const TimeGrid& grid);

  /// Analytic minimal expected cost for the optimal gains.
  double analytic_cost() const;
};

struct Ensemble {
  SimConfig config;
  std::vector<TrajectoryRecord> trajectories;  // empty unless keep_records
  std::vector<double> total_costs;             // one per trajectory, index order
};

struct CostEstimate {
  double mean = 0.0;
  /// Standard error of the mean; NaN for a single trajectory.
  double std_error = 0.0;
  std::size_t n = 0;
};

/// X^T F X + Tr[F Sigma] + 2 u^T G X + u^T u.
double running_posterior_cost(const Vec& xhat, const Mat& sigma, const Vec& u, const CostSpec& cost);

Ensemble simulate_closed_loop(const ClosedLoopPlan& plan, const SimConfig& config);
Ensemble simulate_closed_loop(const PhaseSpaceModel& model, const CostSpec& cost, const GaussianBelief& initial,
                              const SimConfig& config);

CostEstimate monte_carlo_expected_cost(const Ensemble& ensemble);

/// Mean and standard error of per-trajectory differences b - a for two
/// ensembles simulated with the same seed (common random numbers).
CostEstimate paired_cost_difference(const Ensemble& a, const Ensemble& b);

/// CSV columns: t, X_i, u_j, dY_k, dYt_k, cost.
std::string trajectory_csv(const TrajectoryRecord& record);

}  // namespace qlqg
