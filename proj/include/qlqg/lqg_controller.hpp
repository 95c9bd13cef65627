#pragma once

#include <optional>
#include <vector>

#include "qlqg/riccati.hpp"

namespace qlqg {

struct ControlGainPath {
  TimeGrid grid;
  std::vector<Mat> gains;  // k x m, one per grid point

  const Mat& at(int k) const { return gains.at(static_cast<std::size_t>(k)); }
};

/// Quadratic value function S(t, Xhat, Sigma) = Xhat^T Omega_t Xhat + <Omega_t, Sigma> + alpha_t.
struct QuadraticValue {
  Mat Omega_t;
  double alpha_t = 0.0;

  double operator()(const Vec& xhat, const Mat& sigma) const;
};

struct QuadraticValuePath {
  MatrixPath omega;
  ScalarPath alpha;

  QuadraticValue at(int k) const;
};

/// gains[k] = B^T Omega(t_k) + G.
ControlGainPath control_gain_path(const MatrixPath& omega, const LinearCoefficients& c, const CostSpec& cost);

/// u = -gain * Xhat.
Vec optimal_control(const Mat& gain, const Vec& xhat);

/// Pointwise minimiser of <rho, C(u)> + <rho, L(u)[dS]> for quadratic cost,
/// given the mean-gradient of the value function: -(B^T grad / 2 + G Xhat).
Vec bellman_minimizer(const Vec& grad_mean, const Vec& xhat, const LinearCoefficients& c, const CostSpec& cost);

/// Relabelling of phase-space coordinates; entry i names the old index that
/// becomes new index i.
using Permutation = std::vector<int>;

Mat permutation_matrix(const Permutation& perm);

struct FilterProblem {
  Mat A, C, N, M;
  Mat Sigma0;
  double horizon = 1.0;

  /// Coefficients with an empty control input (B is m x 0).
  LinearCoefficients coefficients() const;
};

struct ControlProblem {
  Mat A, B, F, G;
  Mat Omega_T;
  double horizon = 1.0;

  /// Coefficients with an empty output (C is 0 x m).
  LinearCoefficients coefficients() const;
  CostSpec cost() const;
};

/// Filtering/control duality: A -> A^T, C -> B^T, N -> F, M -> G^T,
/// Sigma_t -> Omega_{T-t}, optionally followed by a coordinate relabelling P
/// (A' = P A^T P^T, B' = P C^T, F' = P N P^T, G' = M^T P^T).
ControlProblem duality_map(const FilterProblem& filter, const std::optional<Permutation>& perm = std::nullopt);
/// Inverse of the map above for the same relabelling.
FilterProblem duality_map(const ControlProblem& control, const std::optional<Permutation>& perm = std::nullopt);

/// Control Riccati solution obtained by integrating the dual filter Riccati
/// equation forward and reflecting time.
MatrixPath control_riccati_via_duality(const ControlProblem& control, const TimeGrid& grid,
                                       const std::optional<Permutation>& perm = std::nullopt);
/// Filter covariance obtained from the dual backward control Riccati equation.
MatrixPath filter_riccati_via_duality(const FilterProblem& filter, const TimeGrid& grid,
                                      const std::optional<Permutation>& perm = std::nullopt);

/// Absolute residual of the Hamilton-Jacobi-Bellman equation for the
/// quadratic ansatz at grid index k and point (Xhat, Sigma). dS/dt uses the
/// centred five-point difference inside the grid and shifted five-point
/// stencils within two points of either end.
///
/// The ansatz carries alpha_t built from one covariance path Sigma_t, so the
/// residual vanishes (to discretisation error) only for Sigma = Sigma_t; off
/// that path it equals |Tr[(B^T Omega + G)^T (B^T Omega + G)(Sigma_t - Sigma)]|.
double hjb_residual(const QuadraticValuePath& value, int k, const Vec& xhat, const Mat& sigma,
                    const LinearCoefficients& c, const CostSpec& cost);

}  // namespace qlqg
