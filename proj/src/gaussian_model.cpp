#include "qlqg/gaussian_model.hpp"

#include <cmath>
#include <sstream>

namespace qlqg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonRealCoefficient: return "NonRealCoefficient";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NotAProjectorFamily: return "NotAProjectorFamily";
    case ErrorKind::NotUnitary: return "NotUnitary";
    case ErrorKind::UncertaintyViolation: return "UncertaintyViolation";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorKind::PositivityLoss: return "PositivityLoss";
  }
  return "Unknown";
}

bool is_input_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UncertaintyViolation:
    case ErrorKind::NonFinite:
    case ErrorKind::NoConvergence:
    case ErrorKind::EmptyEnsemble:
    case ErrorKind::PositivityLoss:
      return false;
    default:
      return true;
  }
}

namespace {

constexpr double kSymmetryTolerance = 1e-9;
constexpr double kDegeneracyTolerance = 1e-12;

std::string shape(Index r, Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

void require_shape(const Mat& z, Index rows, Index cols, const char* name) {
  require(z.rows() == rows && z.cols() == cols, ErrorKind::DimensionMismatch,
          std::string(name) + " must be " + shape(rows, cols) + ", got " + shape(z.rows(), z.cols()));
}

}  // namespace

PhaseSpaceModel validated(const PhaseSpaceModel& model) {
  const Index m = model.J.rows();
  require(m > 0 && m % 2 == 0, ErrorKind::InvalidModel, "phase-space dimension must be even and positive");
  require_shape(model.J, m, m, "J");
  require_shape(model.R, m, m, "R");
  require(model.Lambda.cols() == m, ErrorKind::DimensionMismatch, "Lambda must have m columns");
  require(model.Lambda.rows() > 0, ErrorKind::InvalidModel, "at least one measurement channel is required");
  require(model.K.rows() == m, ErrorKind::DimensionMismatch, "K must have m rows");
  require(std::isfinite(model.hbar) && model.hbar > 0.0, ErrorKind::InvalidParameter, "hbar must be positive");
  require(model.J.allFinite() && model.R.allFinite() && model.Lambda.allFinite() && model.K.allFinite(),
          ErrorKind::InvalidModel, "model matrices must be finite");

  const double jscale = std::max(1.0, max_abs(model.J));
  require(max_abs(model.J + model.J.transpose()) <= kSymmetryTolerance * jscale, ErrorKind::InvalidModel,
          "J must be antisymmetric");
  require(std::abs(model.J.determinant()) > kDegeneracyTolerance, ErrorKind::InvalidModel, "J is degenerate");
  const double rscale = std::max(1.0, max_abs(model.R));
  require(max_abs(model.R - model.R.transpose()) <= kSymmetryTolerance * rscale, ErrorKind::InvalidModel,
          "R must be symmetric");

  PhaseSpaceModel out = model;
  out.J = 0.5 * (model.J - model.J.transpose());
  out.R = symmetrized(model.R);
  return out;
}

Mat take_real(const CMat& z, const char* name) {
  const double residue = max_abs(z.imag());
  if (residue > kImagResidueTolerance) {
    std::ostringstream os;
    os << name << " has imaginary residue " << residue;
    throw Error(ErrorKind::NonRealCoefficient, os.str());
  }
  return z.real();
}

LinearCoefficients build_coefficients(const PhaseSpaceModel& input) {
  const PhaseSpaceModel model = validated(input);
  const double hbar = model.hbar;
  const Complex i(0.0, 1.0);
  const CMat J = model.J.cast<Complex>();
  const CMat& Lam = model.Lambda;

  const CMat gram = Lam.adjoint() * Lam;               // Lambda^dagger Lambda
  const CMat gram_conj = Lam.transpose() * Lam.conjugate();  // Lambda^T Lambda^*
  // 2i Im(Lambda^dagger Lambda) = Lambda^dagger Lambda - Lambda^T Lambda^*
  const CMat im_gram = (gram - gram_conj) / (2.0 * i);

  LinearCoefficients c;
  c.A = take_real(J * (model.R.cast<Complex>() + hbar * im_gram), "A");
  c.B = take_real(J * (model.K + model.K.conjugate()), "B");
  c.C = take_real(Lam + Lam.conjugate(), "C");
  c.N = take_real(0.5 * hbar * hbar * J * (gram + gram_conj) * J.transpose(), "N");
  c.M = take_real(0.5 * i * hbar * J * (Lam.transpose() - Lam.adjoint()), "M");
  c.N = symmetrized(c.N);
  c.symplectic = Symplectic{model.J, hbar};
  return c;
}

double uncertainty_min_eigenvalue(const Mat& cov, const Mat& J, double hbar) {
  require(cov.rows() == cov.cols() && cov.rows() == J.rows() && J.rows() == J.cols(),
          ErrorKind::DimensionMismatch, "covariance and J must be square of equal size");
  const CMat h = cov.cast<Complex>() + Complex(0.0, 0.5 * hbar) * J.cast<Complex>();
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

UncertaintyReport check_uncertainty(const Mat& cov, const Mat& J, double hbar, double tolerance) {
  UncertaintyReport r;
  r.min_eigenvalue = uncertainty_min_eigenvalue(cov, J, hbar);
  r.pass = r.min_eigenvalue >= -tolerance;
  return r;
}

Mat standard_symplectic(Index m) {
  require(m > 0 && m % 2 == 0, ErrorKind::InvalidParameter, "symplectic dimension must be even");
  Mat J = Mat::Zero(m, m);
  for (Index k = 0; k < m; k += 2) {
    J(k, k + 1) = 1.0;
    J(k + 1, k) = -1.0;
  }
  return J;
}

PhaseSpaceModel free_particle_model(double mass, double hbar) {
  require(std::isfinite(mass) && mass > 0.0, ErrorKind::InvalidParameter, "mass must be positive");
  require(std::isfinite(hbar) && hbar > 0.0, ErrorKind::InvalidParameter, "hbar must be positive");
  PhaseSpaceModel fp;
  fp.J = standard_symplectic(2);
  fp.R = Mat::Zero(2, 2);
  fp.R(1, 1) = 1.0 / mass;
  fp.Lambda = CMat::Zero(1, 2);
  fp.Lambda(0, 0) = 1.0;
  // X^T K u + u^T K^dagger X = -u Q
  fp.K = CMat::Zero(2, 1);
  fp.K(0, 0) = -0.5;
  fp.hbar = hbar;
  return fp;
}

}  // namespace qlqg
