#include "qlqg/kalman_filter.hpp"

#include <cmath>

namespace qlqg {

Mat filter_gain(const Mat& sigma, const LinearCoefficients& c) {
  require(sigma.rows() == c.dim() && sigma.cols() == c.dim(), ErrorKind::DimensionMismatch,
          "covariance must be m x m");
  require(c.C.cols() == c.dim() && c.M.rows() == c.dim() && c.M.cols() == c.C.rows(), ErrorKind::DimensionMismatch,
          "output coefficients have inconsistent shapes");
  return sigma * c.C.transpose() + c.M;
}

Vec innovation(const MeasurementIncrement& inc, const Vec& xhat, const LinearCoefficients& c) {
  return inc.dY - c.C * xhat * inc.dt;
}

GaussianBelief filter_step(const GaussianBelief& belief, const Vec& u, const MeasurementIncrement& inc,
                           const LinearCoefficients& c, const Mat& sigma_next) {
  const Index m = c.dim();
  require(belief.mean.size() == m, ErrorKind::DimensionMismatch, "mean must have m entries");
  require(u.size() == c.controls(), ErrorKind::DimensionMismatch, "control must have k entries");
  require(inc.dY.size() == c.channels(), ErrorKind::DimensionMismatch, "dY must have d entries");
  require(sigma_next.rows() == m && sigma_next.cols() == m, ErrorKind::DimensionMismatch,
          "next covariance must be m x m");
  require(inc.dt > 0.0 && std::isfinite(inc.dt) && inc.dY.allFinite(), ErrorKind::InvalidParameter,
          "measurement increment must be finite with dt > 0");

  GaussianBelief next;
  next.mean = belief.mean + (c.A * belief.mean + c.B * u) * inc.dt +
              filter_gain(belief.cov, c) * innovation(inc, belief.mean, c);
  next.cov = symmetrized(sigma_next);
  require(next.mean.allFinite(), ErrorKind::NonFinite, "posterior mean became non-finite");
  return next;
}

}  // namespace qlqg
