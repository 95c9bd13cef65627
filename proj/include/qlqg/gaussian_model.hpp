#pragma once

#include <optional>

#include "qlqg/types.hpp"

namespace qlqg {

/// Linear quantum system on an m-dimensional phase space X = (X^1..X^m)
/// with [X, X^T] = i hbar J, quadratic Hamiltonian
///   H(u) = 1/2 X^T R X + X^T K u + u^T K^dagger X
/// and d homodyne channels coupled through L = Lambda X.
struct PhaseSpaceModel {
  Mat J;        // m x m, antisymmetric, nondegenerate
  Mat R;        // m x m, symmetric
  CMat Lambda;  // d x m
  CMat K;       // m x k, k = number of control inputs
  double hbar = 1.0;

  Index dim() const { return J.rows(); }
  Index channels() const { return Lambda.rows(); }
  Index controls() const { return K.cols(); }
};

/// Symplectic data carried along with the derived coefficients so that
/// covariance integrators can monitor the Heisenberg bound.
struct Symplectic {
  Mat J;
  double hbar = 1.0;
};

/// Drift/input/output/noise matrices of
///   dX = (A X + B u) dt + dV,   dY = C X dt + dW
/// with E[dV dV^T] = N dt and E[dV dW^T] = M dt.
struct LinearCoefficients {
  Mat A;  // m x m
  Mat B;  // m x k
  Mat C;  // d x m
  Mat N;  // m x m, symmetric PSD
  Mat M;  // m x d
  std::optional<Symplectic> symplectic;

  Index dim() const { return A.rows(); }
  Index channels() const { return C.rows(); }
  Index controls() const { return B.cols(); }
};

/// Posterior mean and symmetric error covariance of a Gaussian state.
struct GaussianBelief {
  Vec mean;
  Mat cov;
};

struct UncertaintyReport {
  bool pass = false;
  double min_eigenvalue = 0.0;
};

inline constexpr double kImagResidueTolerance = 1e-12;
inline constexpr double kUncertaintyTolerance = 1e-9;

/// Validates shapes and invariants; returns a copy with R (and J) exactly
/// (anti)symmetrized. Throws InvalidModel / DimensionMismatch.
PhaseSpaceModel validated(const PhaseSpaceModel& model);

LinearCoefficients build_coefficients(const PhaseSpaceModel& model);

/// Real part of `z`, throwing NonRealCoefficient if any imaginary residue
/// exceeds kImagResidueTolerance.
Mat take_real(const CMat& z, const char* name);

/// Checks Sigma + (i hbar / 2) J >= 0. By antisymmetry of J this is
/// equivalent to the two-sided bound Sigma >= +-(i hbar / 2) J.
UncertaintyReport check_uncertainty(const Mat& cov, const Mat& J, double hbar,
                                    double tolerance = kUncertaintyTolerance);

/// Minimum eigenvalue of the Hermitian matrix Sigma + (i hbar / 2) J.
double uncertainty_min_eigenvalue(const Mat& cov, const Mat& J, double hbar);

/// Block-diagonal standard symplectic form, blocks [[0, 1], [-1, 0]].
Mat standard_symplectic(Index m);

/// Free particle X = (Q, P) of mass `mass`, H(u) = P^2 / 2M - u Q, L = Q.
PhaseSpaceModel free_particle_model(double mass, double hbar);

}  // namespace qlqg
