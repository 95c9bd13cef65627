#pragma once

#include <limits>
#include <string>
#include <vector>

#include "qlqg/gaussian_model.hpp"

namespace qlqg {

/// Uniform grid t_k = t0 + k dt, k = 0..n_steps.
struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  int n_steps = 1;

  static TimeGrid make(double t0, double t1, int n_steps);
  /// Grid on [0, horizon] with step as close as possible to `dt`.
  static TimeGrid with_step(double horizon, double dt);

  double dt() const { return (t1 - t0) / n_steps; }
  double time(int k) const { return k == n_steps ? t1 : t0 + k * dt(); }
  int size() const { return n_steps + 1; }
  void validate() const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Quadratic cost C(u) = X^T F X + X^T G^T u + u^T G X + u^T u, S = X^T Omega_T X.
struct CostSpec {
  Mat F;        // m x m, symmetric PSD
  Mat G;        // k x m
  Mat Omega_T;  // m x m, symmetric PSD

  /// Validates against phase-space dimension m and control dimension k.
  void validate(Index m, Index k) const;
};

struct MatrixPath {
  TimeGrid grid;
  std::vector<Mat> values;
  /// Minimum of eig(Sigma_t + i hbar J / 2) along the path; NaN when the
  /// coefficients carry no symplectic data.
  double min_uncertainty_eigenvalue = std::numeric_limits<double>::quiet_NaN();

  const Mat& at(int k) const { return values.at(static_cast<std::size_t>(k)); }
  const Mat& front() const { return values.front(); }
  const Mat& back() const { return values.back(); }
};

struct ScalarPath {
  TimeGrid grid;
  std::vector<double> values;
};

struct RiccatiOptions {
  /// Any entry above this magnitude is treated as finite escape.
  double escape_threshold = 1e12;
  /// Heisenberg monitoring tolerance for conditional covariance paths.
  double uncertainty_tolerance = 1e-8;
};

// Right-hand sides, exposed for residual checks.
Mat filter_riccati_rhs(const LinearCoefficients& c, const Mat& sigma);
/// Returns -dOmega/dt.
Mat control_riccati_rhs(const LinearCoefficients& c, const CostSpec& cost, const Mat& omega);
Mat lyapunov_rhs(const LinearCoefficients& c, const Mat& sigma);

/// dSigma/dt = A Sigma + Sigma A^T + N - (Sigma C^T + M)(Sigma C^T + M)^T, forward RK4.
MatrixPath integrate_filter_riccati(const LinearCoefficients& c, const Mat& sigma0, const TimeGrid& grid,
                                    const RiccatiOptions& opts = {});

/// -dOmega/dt = Omega A + A^T Omega + F - (B^T Omega + G)^T (B^T Omega + G),
/// Omega(t1) = Omega_T, backward RK4. Values are indexed by forward time.
MatrixPath integrate_control_riccati(const LinearCoefficients& c, const CostSpec& cost, const TimeGrid& grid,
                                     const RiccatiOptions& opts = {});

enum class Quadrature {
  Trapezoid,
  /// Trapezoid plus the h^2/12 endpoint-derivative correction on every
  /// panel, with integrand slopes from five-point differences. Fourth order.
  EndCorrected,
};

/// Offset of the quadratic value function:
///   -dalpha/dt = Tr[(B^T Omega + G)^T (B^T Omega + G) Sigma_t] + Tr[Omega_t N],  alpha(t1) = 0,
/// integrated backward on the path grid.
ScalarPath integrate_alpha(const MatrixPath& omega, const MatrixPath& sigma, const LinearCoefficients& c,
                           const CostSpec& cost, Quadrature rule = Quadrature::Trapezoid);

/// Unconditional (measurement-averaged) covariance: dSigma/dt = A Sigma + Sigma A^T + N.
MatrixPath lyapunov_unconditional(const LinearCoefficients& c, const Mat& sigma0, const TimeGrid& grid,
                                  const RiccatiOptions& opts = {});

struct StationaryOptions {
  double dt = 1e-2;
  double t_max = 1e3;
  double rate_tolerance = 1e-10;
  double residual_tolerance = 1e-8;
};

/// Long-time limit of the filter Riccati flow, found by forward integration.
/// Throws NoConvergence if ||dSigma/dt||_inf stays above tolerance up to t_max.
Mat stationary_filter_covariance(const LinearCoefficients& c, const StationaryOptions& opts = {});
Mat stationary_filter_covariance(const LinearCoefficients& c, const Mat& sigma_start,
                                 const StationaryOptions& opts = {});

/// Xbar^T Omega_0 Xbar + Tr[Omega_0 Sigma0] + int Tr[Omega_t N] dt
///   + int Tr[(B^T Omega_t + G)^T (B^T Omega_t + G) Sigma_t] dt.
double total_minimal_cost(const Vec& xbar, const Mat& sigma0, const MatrixPath& omega, const MatrixPath& sigma,
                          const LinearCoefficients& c, const CostSpec& cost);

/// CSV with header `t,<prefix>_ij...` and row-major entries.
void write_path_csv(const MatrixPath& path, const std::string& file, const std::string& prefix);
std::string path_csv(const MatrixPath& path, const std::string& prefix);

}  // namespace qlqg
