#include "qlqg/riccati.hpp"

#include <cmath>
#include <sstream>

#include "qlqg/csv.hpp"
#include "qlqg/finite_difference.hpp"

namespace qlqg {

TimeGrid TimeGrid::make(double t0, double t1, int n_steps) {
  TimeGrid g{t0, t1, n_steps};
  g.validate();
  return g;
}

TimeGrid TimeGrid::with_step(double horizon, double dt) {
  require(std::isfinite(horizon) && horizon > 0.0 && std::isfinite(dt) && dt > 0.0, ErrorKind::ConfigError,
          "horizon and dt must be positive");
  const double n = std::round(horizon / dt);
  require(n >= 1.0 && n < 2e9, ErrorKind::ConfigError, "grid step count out of range");
  return make(0.0, horizon, static_cast<int>(n));
}

void TimeGrid::validate() const {
  require(std::isfinite(t0) && std::isfinite(t1) && t0 < t1, ErrorKind::ConfigError, "grid requires t0 < t1");
  require(n_steps >= 1, ErrorKind::ConfigError, "grid requires n_steps >= 1");
  require(dt() > 0.0, ErrorKind::ConfigError, "grid step underflows");
}

void CostSpec::validate(Index m, Index k) const {
  require(F.rows() == m && F.cols() == m, ErrorKind::DimensionMismatch, "F must be m x m");
  require(Omega_T.rows() == m && Omega_T.cols() == m, ErrorKind::DimensionMismatch, "Omega_T must be m x m");
  require(G.rows() == k && G.cols() == m, ErrorKind::DimensionMismatch, "G must be k x m");
  require(F.allFinite() && G.allFinite() && Omega_T.allFinite(), ErrorKind::InvalidParameter,
          "cost matrices must be finite");
  constexpr double tol = 1e-12;
  for (const auto* mat : {&F, &Omega_T}) {
    const char* name = mat == &F ? "F" : "Omega_T";
    const double scale = std::max(1.0, max_abs(*mat));
    require(max_abs(*mat - mat->transpose()) <= tol * scale, ErrorKind::InvalidParameter,
            std::string(name) + " must be symmetric");
    if (m > 0) {
      Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(*mat), Eigen::EigenvaluesOnly);
      require(es.eigenvalues().minCoeff() >= -tol * scale, ErrorKind::InvalidParameter,
              std::string(name) + " must be positive semidefinite");
    }
  }
}

namespace {

template <typename Rhs>
Mat rk4_step(const Mat& x, double h, Rhs&& f) {
  const Mat k1 = f(x);
  const Mat k2 = f(x + 0.5 * h * k1);
  const Mat k3 = f(x + 0.5 * h * k2);
  const Mat k4 = f(x + h * k3);
  return symmetrized(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

void check_finite(const Mat& x, double threshold, double t, const char* what) {
  if (!x.allFinite() || max_abs(x) > threshold) {
    std::ostringstream os;
    os << what << " escaped at t=" << t << " (|entry| > " << threshold << ")";
    throw Error(ErrorKind::NonFinite, os.str());
  }
}

void require_square(const Mat& x, Index m, const char* name) {
  require(x.rows() == m && x.cols() == m, ErrorKind::DimensionMismatch, std::string(name) + " must be m x m");
}

void require_coefficients(const LinearCoefficients& c) {
  const Index m = c.dim();
  require(m > 0 && c.A.cols() == m, ErrorKind::DimensionMismatch, "A must be square");
  require(c.N.rows() == m && c.N.cols() == m, ErrorKind::DimensionMismatch, "N must be m x m");
  require(c.C.cols() == m, ErrorKind::DimensionMismatch, "C must have m columns");
  require(c.M.rows() == m && c.M.cols() == c.C.rows(), ErrorKind::DimensionMismatch, "M must be m x d");
  require(c.B.rows() == m, ErrorKind::DimensionMismatch, "B must have m rows");
}

template <typename Rhs>
MatrixPath integrate_forward(const LinearCoefficients& c, const Mat& x0, const TimeGrid& grid,
                             const RiccatiOptions& opts, bool monitor, const char* what, Rhs&& f) {
  grid.validate();
  require_square(x0, c.dim(), "initial covariance");
  MatrixPath path;
  path.grid = grid;
  path.values.reserve(static_cast<std::size_t>(grid.size()));
  path.values.push_back(symmetrized(x0));
  check_finite(path.values.back(), opts.escape_threshold, grid.t0, what);

  const bool hup = monitor && c.symplectic.has_value();
  double floor = std::numeric_limits<double>::infinity();
  auto monitor_point = [&](const Mat& sigma, int k) {
    if (!hup) return;
    const double e = uncertainty_min_eigenvalue(sigma, c.symplectic->J, c.symplectic->hbar);
    floor = std::min(floor, e);
    if (e < -opts.uncertainty_tolerance) {
      std::ostringstream os;
      os << "covariance violates the Heisenberg bound at t=" << grid.time(k) << " (min eigenvalue " << e << ")";
      throw Error(ErrorKind::UncertaintyViolation, os.str());
    }
  };
  monitor_point(path.values.back(), 0);

  const double h = grid.dt();
  for (int k = 0; k < grid.n_steps; ++k) {
    Mat next = rk4_step(path.values.back(), h, f);
    check_finite(next, opts.escape_threshold, grid.time(k + 1), what);
    monitor_point(next, k + 1);
    path.values.push_back(std::move(next));
  }
  if (hup) path.min_uncertainty_eigenvalue = floor;
  return path;
}

double trace_product(const Mat& a, const Mat& b) { return (a.transpose().cwiseProduct(b)).sum(); }

/// Integrand of the alpha equation at grid point k.
double alpha_integrand(const Mat& omega, const Mat& sigma, const LinearCoefficients& c, const CostSpec& cost) {
  const Mat gain = c.B.transpose() * omega + cost.G;
  return trace_product(gain.transpose() * gain, sigma) + trace_product(omega, c.N);
}

void require_same_grid(const MatrixPath& a, const MatrixPath& b) {
  require(a.grid == b.grid, ErrorKind::GridMismatch, "paths are defined on different grids");
  require(a.values.size() == static_cast<std::size_t>(a.grid.size()) && b.values.size() == a.values.size(),
          ErrorKind::GridMismatch, "path length does not match its grid");
}

}  // namespace

Mat filter_riccati_rhs(const LinearCoefficients& c, const Mat& sigma) {
  const Mat gain = sigma * c.C.transpose() + c.M;
  return c.A * sigma + sigma * c.A.transpose() + c.N - gain * gain.transpose();
}

Mat control_riccati_rhs(const LinearCoefficients& c, const CostSpec& cost, const Mat& omega) {
  const Mat gain = c.B.transpose() * omega + cost.G;
  return omega * c.A + c.A.transpose() * omega + cost.F - gain.transpose() * gain;
}

Mat lyapunov_rhs(const LinearCoefficients& c, const Mat& sigma) {
  return c.A * sigma + sigma * c.A.transpose() + c.N;
}

MatrixPath integrate_filter_riccati(const LinearCoefficients& c, const Mat& sigma0, const TimeGrid& grid,
                                    const RiccatiOptions& opts) {
  require_coefficients(c);
  return integrate_forward(c, sigma0, grid, opts, true, "filter covariance",
                           [&c](const Mat& s) { return filter_riccati_rhs(c, s); });
}

MatrixPath lyapunov_unconditional(const LinearCoefficients& c, const Mat& sigma0, const TimeGrid& grid,
                                  const RiccatiOptions& opts) {
  require_coefficients(c);
  // Heisenberg monitoring applies to conditional paths only.
  return integrate_forward(c, sigma0, grid, opts, false, "unconditional covariance",
                           [&c](const Mat& s) { return lyapunov_rhs(c, s); });
}

MatrixPath integrate_control_riccati(const LinearCoefficients& c, const CostSpec& cost, const TimeGrid& grid,
                                     const RiccatiOptions& opts) {
  require_coefficients(c);
  grid.validate();
  cost.validate(c.dim(), c.controls());
  const auto n = static_cast<std::size_t>(grid.size());
  MatrixPath path;
  path.grid = grid;
  path.values.resize(n);
  path.values[n - 1] = symmetrized(cost.Omega_T);
  const double h = grid.dt();
  auto rhs = [&](const Mat& w) { return control_riccati_rhs(c, cost, w); };
  for (int k = grid.n_steps - 1; k >= 0; --k) {
    const auto idx = static_cast<std::size_t>(k);
    path.values[idx] = rk4_step(path.values[idx + 1], h, rhs);
    check_finite(path.values[idx], opts.escape_threshold, grid.time(k), "control value matrix");
  }
  return path;
}

ScalarPath integrate_alpha(const MatrixPath& omega, const MatrixPath& sigma, const LinearCoefficients& c,
                           const CostSpec& cost, Quadrature rule) {
  require_same_grid(omega, sigma);
  const auto n = omega.values.size();
  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k) f[k] = alpha_integrand(omega.values[k], sigma.values[k], c, cost);
  ScalarPath out;
  out.grid = omega.grid;
  out.values.assign(n, 0.0);
  const double h = omega.grid.dt();
  std::vector<double> slope(n, 0.0);
  if (rule == Quadrature::EndCorrected) {
    const int steps = omega.grid.n_steps;
    auto sample = [&f](int j) { return f[static_cast<std::size_t>(j)]; };
    for (int k = 0; k <= steps; ++k) slope[static_cast<std::size_t>(k)] = derivative5(sample, k, steps, h);
  }
  for (std::size_t k = n - 1; k-- > 0;)
    out.values[k] = out.values[k + 1] + 0.5 * h * (f[k] + f[k + 1]) + h * h / 12.0 * (slope[k] - slope[k + 1]);
  return out;
}

Mat stationary_filter_covariance(const LinearCoefficients& c, const StationaryOptions& opts) {
  const double scale = c.symplectic ? std::max(1.0, c.symplectic->hbar) : 1.0;
  return stationary_filter_covariance(c, scale * Mat::Identity(c.dim(), c.dim()), opts);
}

Mat stationary_filter_covariance(const LinearCoefficients& c, const Mat& sigma_start, const StationaryOptions& opts) {
  require_coefficients(c);
  require_square(sigma_start, c.dim(), "starting covariance");
  require(opts.dt > 0.0 && opts.t_max > 0.0, ErrorKind::ConfigError, "stationary solver needs dt, t_max > 0");
  auto rhs = [&c](const Mat& s) { return filter_riccati_rhs(c, s); };
  Mat sigma = symmetrized(sigma_start);
  double t = 0.0;
  while (max_abs(rhs(sigma)) >= opts.rate_tolerance) {
    if (t > opts.t_max) {
      std::ostringstream os;
      os << "filter Riccati flow not stationary after t=" << opts.t_max << " (|dSigma/dt| = " << max_abs(rhs(sigma))
         << ")";
      throw Error(ErrorKind::NoConvergence, os.str());
    }
    sigma = rk4_step(sigma, opts.dt, rhs);
    check_finite(sigma, 1e12, t, "stationary covariance");
    t += opts.dt;
  }
  require(max_abs(rhs(sigma)) < opts.residual_tolerance, ErrorKind::NoConvergence,
          "algebraic Riccati residual above tolerance");
  return sigma;
}

double total_minimal_cost(const Vec& xbar, const Mat& sigma0, const MatrixPath& omega, const MatrixPath& sigma,
                          const LinearCoefficients& c, const CostSpec& cost) {
  require_same_grid(omega, sigma);
  const Index m = c.dim();
  require(xbar.size() == m, ErrorKind::DimensionMismatch, "initial mean must have m entries");
  require_square(sigma0, m, "initial covariance");
  require(max_abs(sigma.front() - sigma0) <= 1e-12 * std::max(1.0, max_abs(sigma0)), ErrorKind::GridMismatch,
          "covariance path does not start at the initial covariance");

  const Mat& omega0 = omega.front();
  const double h = omega.grid.dt();
  double noise_term = 0.0;
  double gain_term = 0.0;
  const auto n = omega.values.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (k == 0 || k + 1 == n) ? 0.5 * h : h;
    const Mat gain = c.B.transpose() * omega.values[k] + cost.G;
    noise_term += w * trace_product(omega.values[k], c.N);
    gain_term += w * trace_product(gain.transpose() * gain, sigma.values[k]);
  }
  const double quadratic = xbar.dot(omega0 * xbar) + trace_product(omega0, sigma0);
  const double total = quadratic + noise_term + gain_term;

  const double via_alpha = quadratic + integrate_alpha(omega, sigma, c, cost).values.front();
  if (std::abs(total - via_alpha) > 1e-9 * std::max(1.0, std::abs(total))) {
    throw std::logic_error("total minimal cost disagrees with the value-function offset");
  }
  return total;
}

std::string path_csv(const MatrixPath& path, const std::string& prefix) {
  std::string out = "t";
  const Index m = path.values.empty() ? 0 : path.values.front().rows();
  const Index cols = path.values.empty() ? 0 : path.values.front().cols();
  const std::string sep = (m > 10 || cols > 10) ? "_" : "";
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < cols; ++j) out += "," + prefix + "_" + std::to_string(i) + sep + std::to_string(j);
  out += '\n';
  std::vector<double> row;
  for (std::size_t k = 0; k < path.values.size(); ++k) {
    row.clear();
    row.push_back(path.grid.time(static_cast<int>(k)));
    const Mat& v = path.values[k];
    for (Index i = 0; i < v.rows(); ++i)
      for (Index j = 0; j < v.cols(); ++j) row.push_back(v(i, j));
    out += csv_row(row);
  }
  return out;
}

void write_path_csv(const MatrixPath& path, const std::string& file, const std::string& prefix) {
  write_text_file(file, path_csv(path, prefix));
}

}  // namespace qlqg
