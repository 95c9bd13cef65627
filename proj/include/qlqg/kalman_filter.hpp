#pragma once

#include "qlqg/gaussian_model.hpp"

namespace qlqg {

/// Integrated output dY = C X dt + dW over one step of length dt.
struct MeasurementIncrement {
  Vec dY;
  double dt = 0.0;
};

/// Kalman gain Sigma C^T + M.
Mat filter_gain(const Mat& sigma, const LinearCoefficients& c);

/// dY - C Xhat dt. Unit-intensity convention: under the filter's own
/// statistics the innovation has covariance dt * I per step.
Vec innovation(const MeasurementIncrement& inc, const Vec& xhat, const LinearCoefficients& c);

/// One Euler-Maruyama update of the posterior mean,
///   Xhat += (A Xhat + B u) dt + (Sigma_t C^T + M) dYtilde,
/// with the covariance replaced by `sigma_next` from a precomputed Riccati path.
GaussianBelief filter_step(const GaussianBelief& belief, const Vec& u, const MeasurementIncrement& inc,
                           const LinearCoefficients& c, const Mat& sigma_next);

}  // namespace qlqg
