#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qlqg/kalman_filter.hpp"
#include "qlqg/parallel.hpp"
#include "qlqg/riccati.hpp"

using namespace qlqg;

namespace {

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

Vec vec1(double a) { return Vec::Constant(1, a); }

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

LinearCoefficients free_particle() { return build_coefficients(free_particle_model(1.0, 1.0)); }

}  // namespace

TEST_CASE("filter gain") {
  const LinearCoefficients c = free_particle();

  SUBCASE("free particle gain is (2 sQ, 2 sQP)") {
    const Mat g = filter_gain(mat2(0.7, 0.3, 0.3, 1.1), c);
    CHECK(g.rows() == 2);
    CHECK(g.cols() == 1);
    CHECK(g(0, 0) == 1.4);
    CHECK(g(1, 0) == 0.6);
  }
  SUBCASE("no output coupling gives M") {
    LinearCoefficients z = c;
    z.C.setZero();
    z.M << 0.25, -0.5;
    CHECK(filter_gain(mat2(0.7, 0.3, 0.3, 1.1), z) == z.M);
  }
  SUBCASE("zero covariance and M give zero gain") { CHECK(filter_gain(Mat::Zero(2, 2), c).isZero(0.0)); }
  SUBCASE("shape mismatch") {
    try {
      filter_gain(Mat::Zero(3, 3), c);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
  }
}

TEST_CASE("innovation") {
  const LinearCoefficients c = free_particle();
  const Vec xhat = vec2(1.0, 0.0);
  CHECK(innovation({c.C * xhat * 0.01, 0.01}, xhat, c).isZero(0.0));
  CHECK(innovation({vec1(0.03), 0.01}, xhat, c)(0) == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("filter step") {
  const LinearCoefficients c = free_particle();
  const Mat stationary = mat2(0.5, 0.5, 0.5, 1.0);

  SUBCASE("no drift, no control, zero innovation") {
    LinearCoefficients z = c;
    z.A.setZero();
    const GaussianBelief b{vec2(0.3, -0.7), stationary};
    const GaussianBelief next = filter_step(b, vec1(0.0), {z.C * b.mean * 1e-3, 1e-3}, z, stationary);
    CHECK(next.mean == b.mean);
  }
  SUBCASE("one step from the origin") {
    const GaussianBelief b{Vec::Zero(2), stationary};
    const GaussianBelief next = filter_step(b, vec1(0.0), {vec1(0.02), 1e-3}, c, stationary);
    CHECK(next.mean(0) == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(next.mean(1) == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(next.cov == stationary);
  }
  SUBCASE("covariance is replaced and symmetrized") {
    const GaussianBelief b{Vec::Zero(2), stationary};
    const GaussianBelief next = filter_step(b, vec1(0.0), {vec1(0.0), 1e-3}, c, mat2(1.0, 0.2, 0.4, 1.0));
    CHECK(next.cov(0, 1) == next.cov(1, 0));
    CHECK(next.cov(0, 1) == doctest::Approx(0.3));
  }
  SUBCASE("invalid increment") {
    const GaussianBelief b{Vec::Zero(2), stationary};
    CHECK_THROWS_AS(filter_step(b, vec1(0.0), {vec1(0.0), 0.0}, c, stationary), Error);
    CHECK_THROWS_AS(filter_step(b, vec1(0.0), {vec1(NAN), 1e-3}, c, stationary), Error);
    CHECK_THROWS_AS(filter_step(b, Vec::Zero(2), {vec1(0.0), 1e-3}, c, stationary), Error);
  }
}

TEST_CASE("filter step is linear in mean, control and increment") {
  const LinearCoefficients c = free_particle();
  const Mat s = mat2(0.9, 0.2, 0.2, 1.2);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const Vec x1 = oracle::random_matrix(rng, 2, 1), x2 = oracle::random_matrix(rng, 2, 1);
    const Vec u1 = oracle::random_matrix(rng, 1, 1), u2 = oracle::random_matrix(rng, 1, 1);
    const Vec y1 = oracle::random_matrix(rng, 1, 1, 0.1), y2 = oracle::random_matrix(rng, 1, 1, 0.1);
    const double a = 0.7, b = -1.3;
    const Vec lhs = filter_step({a * x1 + b * x2, s}, a * u1 + b * u2, {a * y1 + b * y2, 1e-2}, c, s).mean;
    const Vec rhs = a * filter_step({x1, s}, u1, {y1, 1e-2}, c, s).mean + b * filter_step({x2, s}, u2, {y2, 1e-2}, c, s).mean;
    CHECK(max_abs(lhs - rhs) <= 1e-14);
  }
}

TEST_CASE("covariance sequence does not depend on the measurements") {
  const LinearCoefficients c = free_particle();
  const TimeGrid grid = TimeGrid::make(0, 1, 100);
  const MatrixPath sigma = integrate_filter_riccati(c, Mat::Identity(2, 2), grid);
  GaussianBelief a{Vec::Zero(2), sigma.front()}, b = a;
  NormalStream na(1, 0), nb(2, 0);
  const double h = grid.dt();
  for (int k = 0; k < grid.n_steps; ++k) {
    a = filter_step(a, vec1(0.0), {vec1(std::sqrt(h) * na()), h}, c, sigma.at(k + 1));
    b = filter_step(b, vec1(0.0), {vec1(std::sqrt(h) * nb()), h}, c, sigma.at(k + 1));
    CHECK(a.cov == b.cov);
  }
  CHECK(a.mean != b.mean);
}

TEST_CASE("without output coupling the mean follows the controlled ODE") {
  LinearCoefficients c = free_particle();
  c.C.setZero();
  const TimeGrid grid = TimeGrid::make(0, 1, 1000);
  const Mat sigma = Mat::Identity(2, 2);
  GaussianBelief b{vec2(1.0, 0.5), sigma};
  NormalStream noise(3, 0);
  for (int k = 0; k < grid.n_steps; ++k) b = filter_step(b, vec1(0.2), {vec1(noise() * 0.03), grid.dt()}, c, sigma);
  // Euler for Q' = P, P' = 0.2 is exact for P and gives Q = 1 + 0.5 t + 0.1 t (t - h).
  CHECK(b.mean(1) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(b.mean(0) == doctest::Approx(1.0 + 0.5 + 0.1 * (1.0 - 1e-3)).epsilon(1e-12));
}

TEST_CASE("filter on a simulated hidden state: white innovations and matching error covariance") {
  // Classical stand-in with the same second-order noise statistics: dV ~ N(0, N dt),
  // dW ~ N(0, dt), independent since M = 0 for the free particle.
  const LinearCoefficients c = free_particle();
  const double T = 1.0;
  const TimeGrid grid = TimeGrid::with_step(T, 1e-3);
  const double h = grid.dt();
  const Mat s0 = Mat::Identity(2, 2);
  const MatrixPath sigma = integrate_filter_riccati(c, s0, grid);
  const int n_traj = 4000;

  double sum_z = 0.0, sum_z2 = 0.0;
  Mat err_cov = Mat::Zero(2, 2);
  for (int traj = 0; traj < n_traj; ++traj) {
    NormalStream rng(77, static_cast<std::uint64_t>(traj));
    Vec x = vec2(rng(), rng());  // X0 ~ N(0, I)
    GaussianBelief b{Vec::Zero(2), s0};
    for (int k = 0; k < grid.n_steps; ++k) {
      const double dw = std::sqrt(h) * rng();
      const double dv = std::sqrt(h * c.N(1, 1)) * rng();
      const Vec dY = c.C * x * h + vec1(dw);
      const Vec dYt = innovation({dY, h}, b.mean, c);
      sum_z += dYt(0) / std::sqrt(h);
      sum_z2 += dYt(0) * dYt(0) / h;
      b = filter_step(b, vec1(0.0), {dY, h}, c, sigma.at(k + 1));
      x += c.A * x * h + vec2(0.0, dv);
    }
    const Vec e = x - b.mean;
    err_cov += e * e.transpose();
  }
  const double n = static_cast<double>(n_traj) * grid.n_steps;
  CHECK(std::abs(sum_z / n) <= 4.0 / std::sqrt(n));
  CHECK(std::abs(sum_z2 / n - 1.0) <= 0.02);
  err_cov /= n_traj;
  const Mat& st = sigma.back();
  // Sample variances over 4000 draws carry ~2.2% relative error.
  CHECK(err_cov(0, 0) == doctest::Approx(st(0, 0)).epsilon(0.1));
  CHECK(err_cov(1, 1) == doctest::Approx(st(1, 1)).epsilon(0.1));
  CHECK(std::abs(err_cov(0, 1) - st(0, 1)) <= 0.1 * std::sqrt(st(0, 0) * st(1, 1)));
}

TEST_CASE("stationary spread of the estimate for a damped model") {
  PhaseSpaceModel p;
  p.J = standard_symplectic(2);
  p.R = Mat::Identity(2, 2);
  p.Lambda = CMat(1, 2);
  p.Lambda << Complex(1.0, 0.0), Complex(0.0, 0.5);
  p.K = CMat::Zero(2, 1);
  const LinearCoefficients c = build_coefficients(p);
  const Mat s = stationary_filter_covariance(c);
  const Mat gain = filter_gain(s, c);
  // dXhat = A Xhat dt + K dYtilde at stationarity: A P + P A^T + K K^T = 0.
  const Mat expected = oracle::lyapunov_solve(c.A, gain * gain.transpose());

  const double h = 1e-2;
  const int steps = 1500, n_traj = 3000;
  Mat sample = Mat::Zero(2, 2);
  for (int traj = 0; traj < n_traj; ++traj) {
    NormalStream rng(5, static_cast<std::uint64_t>(traj));
    GaussianBelief b{Vec::Zero(2), s};
    for (int k = 0; k < steps; ++k) {
      const Vec dY = c.C * b.mean * h + vec1(std::sqrt(h) * rng());
      b = filter_step(b, vec1(0.0), {dY, h}, c, s);
    }
    sample += b.mean * b.mean.transpose();
  }
  sample /= n_traj;
  CHECK(sample(0, 0) == doctest::Approx(expected(0, 0)).epsilon(0.1));
  CHECK(sample(1, 1) == doctest::Approx(expected(1, 1)).epsilon(0.1));
  CHECK(std::abs(sample(0, 1) - expected(0, 1)) <= 0.1 * std::sqrt(expected(0, 0) * expected(1, 1)));
}
