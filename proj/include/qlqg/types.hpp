#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace qlqg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;
using Index = Eigen::Index;

enum class ErrorKind {
  DimensionMismatch,
  NonRealCoefficient,
  InvalidParameter,
  InvalidModel,
  GridMismatch,
  ConfigError,
  ParseError,
  NotAProjectorFamily,
  NotUnitary,
  UncertaintyViolation,
  NonFinite,
  NoConvergence,
  EmptyEnsemble,
  PositivityLoss,
};

std::string_view to_string(ErrorKind kind);

/// True for errors caused by bad input (CLI exit code 2); false for
/// numerical failures during integration or simulation (exit code 3).
bool is_input_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

/// Largest absolute entry, 0 for empty matrices.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace qlqg
