#include "qlqg/lqg_controller.hpp"

#include <algorithm>
#include <cmath>

#include "qlqg/finite_difference.hpp"

namespace qlqg {

namespace {

double inner(const Mat& a, const Mat& b) { return (a.cwiseProduct(b)).sum(); }

void check_omega_path(const MatrixPath& omega) {
  require(omega.values.size() == static_cast<std::size_t>(omega.grid.size()), ErrorKind::GridMismatch,
          "value path length does not match its grid");
}

}  // namespace

double QuadraticValue::operator()(const Vec& xhat, const Mat& sigma) const {
  return xhat.dot(Omega_t * xhat) + inner(Omega_t, sigma) + alpha_t;
}

QuadraticValue QuadraticValuePath::at(int k) const {
  return QuadraticValue{omega.at(k), alpha.values.at(static_cast<std::size_t>(k))};
}

ControlGainPath control_gain_path(const MatrixPath& omega, const LinearCoefficients& c, const CostSpec& cost) {
  check_omega_path(omega);
  require(cost.G.rows() == c.controls() && cost.G.cols() == c.dim(), ErrorKind::DimensionMismatch,
          "G must be k x m");
  ControlGainPath out;
  out.grid = omega.grid;
  out.gains.reserve(omega.values.size());
  for (const Mat& w : omega.values) {
    require(w.rows() == c.dim() && w.cols() == c.dim(), ErrorKind::DimensionMismatch, "Omega_t must be m x m");
    out.gains.push_back(c.B.transpose() * w + cost.G);
  }
  return out;
}

Vec optimal_control(const Mat& gain, const Vec& xhat) {
  require(gain.cols() == xhat.size(), ErrorKind::DimensionMismatch, "gain columns must match the mean");
  return -(gain * xhat);
}

Vec bellman_minimizer(const Vec& grad_mean, const Vec& xhat, const LinearCoefficients& c, const CostSpec& cost) {
  return -(0.5 * c.B.transpose() * grad_mean + cost.G * xhat);
}

Mat permutation_matrix(const Permutation& perm) {
  const auto m = static_cast<Index>(perm.size());
  Mat P = Mat::Zero(m, m);
  std::vector<bool> seen(perm.size(), false);
  for (Index i = 0; i < m; ++i) {
    const int j = perm[static_cast<std::size_t>(i)];
    require(j >= 0 && j < m && !seen[static_cast<std::size_t>(j)], ErrorKind::InvalidParameter,
            "permutation must list every index exactly once");
    seen[static_cast<std::size_t>(j)] = true;
    P(i, j) = 1.0;
  }
  return P;
}

LinearCoefficients FilterProblem::coefficients() const {
  LinearCoefficients c;
  c.A = A;
  c.B = Mat::Zero(A.rows(), 0);
  c.C = C;
  c.N = N;
  c.M = M;
  return c;
}

LinearCoefficients ControlProblem::coefficients() const {
  LinearCoefficients c;
  c.A = A;
  c.B = B;
  c.C = Mat::Zero(0, A.rows());
  c.N = Mat::Zero(A.rows(), A.rows());
  c.M = Mat::Zero(A.rows(), 0);
  return c;
}

CostSpec ControlProblem::cost() const { return CostSpec{F, G, Omega_T}; }

namespace {

Mat relabel(const std::optional<Permutation>& perm, Index m) {
  if (!perm) return Mat::Identity(m, m);
  require(static_cast<Index>(perm->size()) == m, ErrorKind::DimensionMismatch,
          "permutation length must equal the phase-space dimension");
  return permutation_matrix(*perm);
}

}  // namespace

ControlProblem duality_map(const FilterProblem& f, const std::optional<Permutation>& perm) {
  const Index m = f.A.rows();
  require(f.A.cols() == m && f.N.rows() == m && f.N.cols() == m && f.C.cols() == m && f.M.rows() == m &&
              f.M.cols() == f.C.rows() && f.Sigma0.rows() == m && f.Sigma0.cols() == m,
          ErrorKind::DimensionMismatch, "filter problem has inconsistent shapes");
  const Mat P = relabel(perm, m);
  ControlProblem c;
  c.A = P * f.A.transpose() * P.transpose();
  c.B = P * f.C.transpose();
  c.F = P * f.N * P.transpose();
  c.G = f.M.transpose() * P.transpose();
  c.Omega_T = P * f.Sigma0 * P.transpose();
  c.horizon = f.horizon;
  return c;
}

FilterProblem duality_map(const ControlProblem& c, const std::optional<Permutation>& perm) {
  const Index m = c.A.rows();
  require(c.A.cols() == m && c.F.rows() == m && c.F.cols() == m && c.B.rows() == m && c.G.cols() == m &&
              c.G.rows() == c.B.cols() && c.Omega_T.rows() == m && c.Omega_T.cols() == m,
          ErrorKind::DimensionMismatch, "control problem has inconsistent shapes");
  const Mat P = relabel(perm, m);
  FilterProblem f;
  f.A = P.transpose() * c.A.transpose() * P;
  f.C = c.B.transpose() * P;
  f.N = P.transpose() * c.F * P;
  f.M = P.transpose() * c.G.transpose();
  f.Sigma0 = P.transpose() * c.Omega_T * P;
  f.horizon = c.horizon;
  return f;
}

MatrixPath control_riccati_via_duality(const ControlProblem& control, const TimeGrid& grid,
                                       const std::optional<Permutation>& perm) {
  const FilterProblem dual = duality_map(control, perm);
  const MatrixPath sigma = integrate_filter_riccati(dual.coefficients(), dual.Sigma0, grid);
  const Mat P = relabel(perm, control.A.rows());
  MatrixPath omega;
  omega.grid = grid;
  omega.values.reserve(sigma.values.size());
  for (auto it = sigma.values.rbegin(); it != sigma.values.rend(); ++it)
    omega.values.push_back(P * (*it) * P.transpose());
  return omega;
}

MatrixPath filter_riccati_via_duality(const FilterProblem& filter, const TimeGrid& grid,
                                      const std::optional<Permutation>& perm) {
  const ControlProblem dual = duality_map(filter, perm);
  const MatrixPath omega = integrate_control_riccati(dual.coefficients(), dual.cost(), grid);
  const Mat P = relabel(perm, filter.A.rows());
  MatrixPath sigma;
  sigma.grid = grid;
  sigma.values.reserve(omega.values.size());
  for (auto it = omega.values.rbegin(); it != omega.values.rend(); ++it)
    sigma.values.push_back(P.transpose() * (*it) * P);
  return sigma;
}

double hjb_residual(const QuadraticValuePath& value, int k, const Vec& xhat, const Mat& sigma,
                    const LinearCoefficients& c, const CostSpec& cost) {
  const TimeGrid& grid = value.omega.grid;
  check_omega_path(value.omega);
  require(value.alpha.grid == grid && value.alpha.values.size() == value.omega.values.size(),
          ErrorKind::GridMismatch, "alpha and Omega paths are on different grids");
  require(grid.n_steps >= 4, ErrorKind::GridMismatch, "HJB residual needs at least five grid points");
  require(k >= 0 && k <= grid.n_steps, ErrorKind::GridMismatch, "grid index out of range");
  const Index m = c.dim();
  require(xhat.size() == m && sigma.rows() == m && sigma.cols() == m, ErrorKind::DimensionMismatch,
          "evaluation point has wrong dimension");

  auto S = [&](int j) { return value.at(j)(xhat, sigma); };
  const double dS_dt = derivative5(S, k, grid.n_steps, grid.dt());

  const Mat& omega = value.omega.at(k);
  const Vec grad_mean = 2.0 * omega * xhat;
  const Mat& grad_cov = omega;
  const Mat hess_mean = 2.0 * omega;
  const Mat gain = sigma * c.C.transpose() + c.M;
  const Vec control_term = 0.5 * c.B.transpose() * grad_mean + cost.G * xhat;

  double rhs = 0.5 * (xhat.dot(c.A.transpose() * grad_mean) + grad_mean.dot(c.A * xhat));
  rhs += xhat.dot(cost.F * xhat);
  rhs += inner(c.A * sigma + sigma * c.A.transpose() + c.N, grad_cov);
  rhs += inner(sigma, cost.F);
  rhs -= control_term.squaredNorm();
  rhs += inner(gain * gain.transpose(), 0.5 * hess_mean - grad_cov);
  return std::abs(-dS_dt - rhs);
}

}  // namespace qlqg
