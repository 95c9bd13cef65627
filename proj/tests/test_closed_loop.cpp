#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qlqg/closed_loop.hpp"

using namespace qlqg;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

CostSpec beta_cost(double beta) {
  CostSpec cost{Mat::Zero(2, 2), Mat::Zero(1, 2), Mat::Identity(2, 2)};
  cost.F(0, 0) = beta;
  return cost;
}

ClosedLoopPlan free_particle_plan(double T, double dt = 1e-3) {
  const LinearCoefficients c = build_coefficients(free_particle_model(1.0, 1.0));
  const GaussianBelief initial{vec2(1.0, 0.0), 0.5 * Mat::Identity(2, 2)};
  return ClosedLoopPlan::make(c, beta_cost(1.0), initial, TimeGrid::with_step(T, dt));
}

SimConfig config_for(const ClosedLoopPlan& plan, int n_traj, std::uint64_t seed, int stride) {
  SimConfig cfg;
  cfg.grid = plan.sigma.grid;
  cfg.n_traj = n_traj;
  cfg.seed = seed;
  cfg.record_stride = stride;
  return cfg;
}

/// Mean of the Euler scheme: x_{k+1} = (I + (A - B L_k) h) x_k.
std::vector<Vec> euler_mean(const ClosedLoopPlan& plan) {
  const LinearCoefficients& c = plan.coeffs;
  const double h = plan.sigma.grid.dt();
  std::vector<Vec> xs{plan.initial.mean};
  for (int k = 0; k < plan.sigma.grid.n_steps; ++k) {
    const Vec& x = xs.back();
    xs.push_back(x + (c.A * x - c.B * (plan.gains.at(k) * x)) * h);
  }
  return xs;
}

}  // namespace

TEST_CASE("running posterior cost") {
  CostSpec cost{Mat::Identity(2, 2), Mat::Zero(1, 2), Mat::Identity(2, 2)};
  CHECK(running_posterior_cost(vec2(1, 2), Mat::Zero(2, 2), Vec::Constant(1, 3.0), cost) == 14.0);
  cost.F << 2.0, 0.5, 0.5, 1.0;
  Mat sigma(2, 2);
  sigma << 0.3, 0.1, 0.1, 0.4;
  CHECK(running_posterior_cost(Vec::Zero(2), sigma, Vec::Zero(1), cost) ==
        doctest::Approx((cost.F * sigma).trace()).epsilon(1e-15));
  cost.G << 0.5, -1.0;
  // 2 u G x with u = 2, x = (1, 1): 2 * 2 * (-0.5) = -2
  CHECK(running_posterior_cost(vec2(1, 1), Mat::Zero(2, 2), Vec::Constant(1, 2.0), cost) ==
        doctest::Approx(4.0 - 2.0 + 4.0).epsilon(1e-15));
}

TEST_CASE("noise-free closed loop follows the deterministic ODE") {
  const ClosedLoopPlan plan = free_particle_plan(2.0);
  SimConfig cfg = config_for(plan, 1, 9, 1);
  cfg.zero_noise = true;
  const Ensemble e = simulate_closed_loop(plan, cfg);
  const std::vector<Vec> expected = euler_mean(plan);
  const TrajectoryRecord& r = e.trajectories.at(0);
  REQUIRE(r.means.size() == expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) CHECK(max_abs(r.means[k] - expected[k]) <= 1e-12);
  // The Euler path is within O(dt) of an RK4 solution of dx/dt = (A - B L_t) x.
  const LinearCoefficients& c = plan.coeffs;
  Vec x = plan.initial.mean;
  const double h2 = 2 * plan.sigma.grid.dt();
  auto f = [&](int k, const Vec& v) { return Vec(c.A * v - c.B * (plan.gains.at(k) * v)); };
  for (int k = 0; k + 2 <= plan.sigma.grid.n_steps; k += 2) {
    const Vec k1 = f(k, x), k2 = f(k + 1, x + 0.5 * h2 * k1), k3 = f(k + 1, x + 0.5 * h2 * k2), k4 = f(k + 2, x + h2 * k3);
    x += h2 / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  CHECK(max_abs(r.means.back() - x) <= 5e-3);
  CHECK(max_abs(r.increments.back() - c.C * r.means[r.means.size() - 2] * plan.sigma.grid.dt()) <= 1e-15);
  CHECK(r.innovations.back().isZero(0.0));
}

TEST_CASE("noise-free ensemble has zero variance") {
  const ClosedLoopPlan plan = free_particle_plan(1.0);
  SimConfig cfg = config_for(plan, 5, 1, 1);
  cfg.zero_noise = true;
  const CostEstimate est = monte_carlo_expected_cost(simulate_closed_loop(plan, cfg));
  CHECK(est.n == 5);
  CHECK(est.std_error == 0.0);
}

TEST_CASE("single trajectory has undefined standard error") {
  const ClosedLoopPlan plan = free_particle_plan(1.0);
  const CostEstimate est = monte_carlo_expected_cost(simulate_closed_loop(plan, config_for(plan, 1, 1, 1)));
  CHECK(est.n == 1);
  CHECK(std::isnan(est.std_error));
  CHECK(std::isfinite(est.mean));
}

TEST_CASE("empty ensemble") {
  try {
    monte_carlo_expected_cost(Ensemble{});
    FAIL("expected EmptyEnsemble");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyEnsemble);
  }
}

TEST_CASE("configuration errors") {
  const ClosedLoopPlan plan = free_particle_plan(1.0);
  for (auto [n, stride] : std::vector<std::pair<int, int>>{{0, 1}, {1, 0}, {1, 7}}) {
    try {
      simulate_closed_loop(plan, config_for(plan, n, 1, stride));
      FAIL("expected ConfigError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ConfigError);
    }
  }
  SimConfig other = config_for(plan, 1, 1, 1);
  other.grid = TimeGrid::make(0, 2, 100);
  CHECK_THROWS_AS(simulate_closed_loop(plan, other), Error);
}

TEST_CASE("determinism and independence from the thread count") {
  const ClosedLoopPlan plan = free_particle_plan(1.0, 1e-2);
  SimConfig cfg = config_for(plan, 64, 1234, 10);
  const Ensemble a = simulate_closed_loop(plan, cfg);
  cfg.threads = 4;
  const Ensemble b = simulate_closed_loop(plan, cfg);
  CHECK(a.total_costs == b.total_costs);
  for (std::size_t i = 0; i < a.trajectories.size(); ++i)
    CHECK(trajectory_csv(a.trajectories[i]) == trajectory_csv(b.trajectories[i]));
  cfg.seed = 1235;
  CHECK(simulate_closed_loop(plan, cfg).total_costs != a.total_costs);
}

TEST_CASE("records follow the stride") {
  const ClosedLoopPlan plan = free_particle_plan(1.0, 1e-2);
  const Ensemble e = simulate_closed_loop(plan, config_for(plan, 2, 3, 25));
  const TrajectoryRecord& r = e.trajectories.at(1);
  CHECK(r.times == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(r.means.size() == 5);
  CHECK(r.running_cost.front() == 0.0);
  CHECK(r.total_cost == e.total_costs[1]);
  const std::string csv = trajectory_csv(r);
  CHECK(csv.substr(0, csv.find('\n')) == "t,X_0,X_1,u_0,dY_0,dYt_0,cost");
}

TEST_CASE("model overload builds the same plan") {
  const ClosedLoopPlan plan = free_particle_plan(1.0, 1e-2);
  SimConfig cfg = config_for(plan, 8, 5, 1);
  const Ensemble a = simulate_closed_loop(plan, cfg);
  const Ensemble b = simulate_closed_loop(free_particle_model(1.0, 1.0), plan.cost, plan.initial, cfg);
  CHECK(a.total_costs == b.total_costs);
}

TEST_CASE("innovation statistics") {
  const ClosedLoopPlan plan = free_particle_plan(1.0);
  const Ensemble e = simulate_closed_loop(plan, config_for(plan, 1000, 77, 1));
  const double h = plan.sigma.grid.dt();
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (const TrajectoryRecord& r : e.trajectories)
    for (std::size_t k = 1; k < r.innovations.size(); ++k) {
      const double z = r.innovations[k](0) / std::sqrt(h);
      sum += z;
      sum2 += z * z;
      ++n;
    }
  REQUIRE(n >= 1000000);
  const double mean = sum / n;
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs((sum2 / n - mean * mean) - 1.0) <= 0.02);
}

TEST_CASE("free-particle ensemble: mean, covariance and cost") {
  const ClosedLoopPlan plan = free_particle_plan(5.0);
  const int n_traj = 10000, stride = 500;
  const Ensemble e = simulate_closed_loop(plan, config_for(plan, n_traj, 20240601, stride));
  const std::vector<Vec> expected = euler_mean(plan);

  SUBCASE("sample mean tracks the deterministic closed loop") {
    const std::size_t records = e.trajectories.front().means.size();
    for (std::size_t j = 0; j < records; ++j) {
      Vec mean = Vec::Zero(2), sq = Vec::Zero(2);
      for (const TrajectoryRecord& r : e.trajectories) {
        mean += r.means[j];
        sq += r.means[j].cwiseAbs2();
      }
      mean /= n_traj;
      const Vec var = sq / n_traj - mean.cwiseAbs2();
      const Vec& ref = expected[j * stride];
      for (Index i = 0; i < 2; ++i) {
        const double se = std::sqrt(std::max(var(i), 0.0) / n_traj);
        CHECK(std::abs(mean(i) - ref(i)) <= 3.0 * se + 1e-12);
      }
    }
  }

  SUBCASE("sample covariance matches the moment equation at T") {
    // dP/dt = (A - B L) P + P (A - B L)^T + K K^T, P(0) = 0, RK4 with step 2h.
    const LinearCoefficients& c = plan.coeffs;
    const TimeGrid& grid = plan.sigma.grid;
    auto f = [&](int k, const Mat& p) {
      const Mat a = c.A - c.B * plan.gains.at(k);
      const Mat g = plan.sigma.at(k) * c.C.transpose() + c.M;
      return Mat(a * p + p * a.transpose() + g * g.transpose());
    };
    Mat p = Mat::Zero(2, 2);
    const double h2 = 2 * grid.dt();
    for (int k = 0; k + 2 <= grid.n_steps; k += 2) {
      const Mat k1 = f(k, p), k2 = f(k + 1, p + 0.5 * h2 * k1), k3 = f(k + 1, p + 0.5 * h2 * k2), k4 = f(k + 2, p + h2 * k3);
      p += h2 / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    Vec mean = Vec::Zero(2);
    Mat second = Mat::Zero(2, 2);
    for (const TrajectoryRecord& r : e.trajectories) {
      mean += r.means.back();
      second += r.means.back() * r.means.back().transpose();
    }
    mean /= n_traj;
    const Mat cov = (second - n_traj * mean * mean.transpose()) / (n_traj - 1);
    CHECK(cov(0, 0) == doctest::Approx(p(0, 0)).epsilon(0.05));
    CHECK(cov(1, 1) == doctest::Approx(p(1, 1)).epsilon(0.05));
    CHECK(std::abs(cov(0, 1) - p(0, 1)) <= 0.05 * std::sqrt(p(0, 0) * p(1, 1)));
  }

  SUBCASE("Monte-Carlo cost agrees with the analytic minimal cost") {
    const CostEstimate est = monte_carlo_expected_cost(e);
    CHECK(est.n == static_cast<std::size_t>(n_traj));
    CHECK(std::abs(est.mean - plan.analytic_cost()) <= 3.0 * est.std_error);
  }

  SUBCASE("perturbed gains cost more") {
    ClosedLoopPlan worse = plan;
    for (Mat& l : worse.gains.gains) l.array() += 0.2;
    SimConfig cfg = config_for(plan, n_traj, 20240601, stride);
    cfg.keep_records = false;
    const Ensemble p = simulate_closed_loop(worse, cfg);
    const CostEstimate opt = monte_carlo_expected_cost(e), pert = monte_carlo_expected_cost(p);
    CHECK(pert.mean >= opt.mean - 3.0 * opt.std_error);
    const CostEstimate diff = paired_cost_difference(e, p);
    CHECK(diff.mean >= 3.0 * diff.std_error);
  }
}

TEST_CASE("paired difference requires matching ensembles") {
  const ClosedLoopPlan plan = free_particle_plan(1.0, 1e-2);
  const Ensemble a = simulate_closed_loop(plan, config_for(plan, 4, 1, 1));
  const Ensemble b = simulate_closed_loop(plan, config_for(plan, 5, 1, 1));
  const Ensemble c = simulate_closed_loop(plan, config_for(plan, 4, 2, 1));
  CHECK_THROWS_AS(paired_cost_difference(a, b), Error);
  CHECK_THROWS_AS(paired_cost_difference(a, c), Error);
  const CostEstimate same = paired_cost_difference(a, a);
  CHECK(same.mean == 0.0);
  CHECK(same.std_error == 0.0);
}
