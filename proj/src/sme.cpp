#include "qlqg/sme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "qlqg/csv.hpp"
#include "qlqg/parallel.hpp"

namespace qlqg {

namespace {

constexpr Complex kI{0.0, 1.0};

template <typename M>
double real_trace_product(const M& a, const M& b) {
  return (a.cwiseProduct(b.transpose())).sum().real();
}

template <typename M>
void hermitize(M& x) {
  x = (0.5 * (x + x.adjoint())).eval();
}

bool is_hermitian(const CMat& x, double tol) { return max_abs(x - x.adjoint()) <= tol; }

template <typename M>
double min_eig(const M& h) {
  if (h.rows() == 2) {
    const double a = h(0, 0).real();
    const double d = h(1, 1).real();
    const double half = 0.5 * (a - d);
    return 0.5 * (a + d) - std::sqrt(half * half + std::norm(h(0, 1)));
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(CMat(h), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void check_positive(double lambda_min) {
  if (!(lambda_min >= kPositivityLossThreshold))
    throw Error(ErrorKind::PositivityLoss,
                "density matrix eigenvalue " + format_double(lambda_min) + " below threshold; step too large");
}

}  // namespace

DensityMatrix::DensityMatrix(CMat rho, double positivity_tolerance) : rho_(std::move(rho)) {
  require(rho_.rows() >= 1 && rho_.rows() == rho_.cols(), ErrorKind::DimensionMismatch,
          "density matrix must be square and non-empty");
  require(rho_.allFinite(), ErrorKind::NonFinite, "density matrix has non-finite entries");
  require(is_hermitian(rho_, kHermitianTolerance), ErrorKind::InvalidParameter, "density matrix is not Hermitian");
  require(std::abs(rho_.trace() - 1.0) <= kTraceTolerance, ErrorKind::InvalidParameter,
          "density matrix trace differs from 1");
  const double lambda = hermitian_min_eigenvalue(rho_);
  if (lambda < -positivity_tolerance)
    throw Error(ErrorKind::PositivityLoss, "density matrix has eigenvalue " + format_double(lambda));
}

DensityMatrix DensityMatrix::pure(const CVec& psi) {
  require(psi.size() >= 1 && psi.norm() > 0.0, ErrorKind::InvalidParameter, "state vector must be non-zero");
  const CVec v = psi / psi.norm();
  return DensityMatrix(v * v.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  require(dim >= 1, ErrorKind::InvalidParameter, "dimension must be positive");
  return DensityMatrix(CMat::Identity(dim, dim) / static_cast<double>(dim));
}

double DensityMatrix::min_eigenvalue() const { return hermitian_min_eigenvalue(rho_); }

double DensityMatrix::expectation(const CMat& x) const {
  require(x.rows() == dim() && x.cols() == dim(), ErrorKind::DimensionMismatch, "observable has wrong dimension");
  return real_trace_product(rho_, x);
}

void FiniteModel::validate() const {
  const Index n = H0.rows();
  require(n >= 1 && H0.cols() == n, ErrorKind::DimensionMismatch, "H0 must be square and non-empty");
  require(std::isfinite(hbar) && hbar > 0.0, ErrorKind::InvalidModel, "hbar must be positive");
  require(H0.allFinite(), ErrorKind::InvalidModel, "H0 has non-finite entries");
  require(is_hermitian(H0, 1e-12), ErrorKind::InvalidModel, "H0 is not Hermitian");
  for (const CMat& h : H_controls) {
    require(h.rows() == n && h.cols() == n, ErrorKind::DimensionMismatch, "control Hamiltonian has wrong shape");
    require(h.allFinite(), ErrorKind::InvalidModel, "control Hamiltonian has non-finite entries");
    require(is_hermitian(h, 1e-12), ErrorKind::InvalidModel, "control Hamiltonian is not Hermitian");
  }
  for (const CMat& l : L_list) {
    require(l.rows() == n && l.cols() == n, ErrorKind::DimensionMismatch, "coupling operator has wrong shape");
    require(l.allFinite(), ErrorKind::InvalidModel, "coupling operator has non-finite entries");
  }
}

CMat FiniteModel::hamiltonian(const Vec& u) const {
  require(u.size() == controls(), ErrorKind::DimensionMismatch, "control vector has wrong length");
  require(u.allFinite(), ErrorKind::NonFinite, "control vector has non-finite entries");
  CMat h = H0;
  for (Index k = 0; k < u.size(); ++k) h += u(k) * H_controls[static_cast<std::size_t>(k)];
  return h;
}

double hermitian_min_eigenvalue(const CMat& h) {
  require(h.rows() == h.cols() && h.rows() >= 1, ErrorKind::DimensionMismatch, "matrix must be square");
  return min_eig(h);
}

double trace_norm(const CMat& h) {
  require(h.rows() == h.cols(), ErrorKind::DimensionMismatch, "matrix must be square");
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const CMat& a, const CMat& b) { return 0.5 * trace_norm(a - b); }

CMat lindblad_heisenberg(const CMat& x, const FiniteModel& model, const Vec& u) {
  require(x.rows() == model.dim() && x.cols() == model.dim(), ErrorKind::DimensionMismatch,
          "operator has wrong dimension");
  const CMat h = model.hamiltonian(u);
  CMat out = (kI / model.hbar) * (h * x - x * h);
  for (const CMat& l : model.L_list) {
    const CMat ld = l.adjoint();
    out += 0.5 * (ld * (x * l - l * x) + (ld * x - x * ld) * l);
  }
  return out;
}

CMat lindblad_schrodinger(const CMat& rho, const FiniteModel& model, const Vec& u) {
  require(rho.rows() == model.dim() && rho.cols() == model.dim(), ErrorKind::DimensionMismatch,
          "state has wrong dimension");
  const CMat h = model.hamiltonian(u);
  CMat out = (-kI / model.hbar) * (h * rho - rho * h);
  for (const CMat& l : model.L_list) {
    const CMat ldl = l.adjoint() * l;
    out += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
  }
  return out;
}

CMat fluctuation(const CMat& rho, const CMat& L) {
  require(rho.rows() == L.rows() && rho.cols() == L.cols(), ErrorKind::DimensionMismatch,
          "coupling operator has wrong dimension");
  const double c = 2.0 * (L.cwiseProduct(rho.transpose())).sum().real();
  return rho * L.adjoint() + L * rho - c * rho;
}

DensityMatrix master_step(const DensityMatrix& rho, const FiniteModel& model, const Vec& u, double dt) {
  model.validate();
  require(rho.dim() == model.dim(), ErrorKind::DimensionMismatch, "state and model dimensions differ");
  require(std::isfinite(dt) && dt > 0.0, ErrorKind::InvalidParameter, "dt must be positive");
  const CMat& r = rho.matrix();
  const CMat k1 = lindblad_schrodinger(r, model, u);
  const CMat k2 = lindblad_schrodinger(r + 0.5 * dt * k1, model, u);
  const CMat k3 = lindblad_schrodinger(r + 0.5 * dt * k2, model, u);
  const CMat k4 = lindblad_schrodinger(r + dt * k3, model, u);
  CMat next = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  hermitize(next);
  require(next.allFinite(), ErrorKind::NonFinite, "master step produced non-finite entries");
  check_positive(min_eig(next));
  return DensityMatrix(std::move(next), -kPositivityLossThreshold);
}

namespace {

/// Allocation-free filtering step on a fixed matrix type.
template <typename M>
class Stepper {
 public:
  Stepper(const FiniteModel& model, SmeScheme scheme, double dt)
      : model_(model), scheme_(scheme), dt_(dt), n_(model.dim()), d_(model.channels()) {
    const auto du = static_cast<std::size_t>(d_);
    L_.resize(du);
    Ld_.resize(du);
    S_ = M::Zero(n_, n_);
    for (std::size_t i = 0; i < du; ++i) {
      L_[i] = model.L_list[i];
      Ld_[i] = L_[i].adjoint();
      S_.noalias() += Ld_[i] * L_[i];
    }
    LL_.resize(du * du);
    for (std::size_t i = 0; i < du; ++i)
      for (std::size_t j = 0; j < du; ++j) LL_[i * du + j].noalias() = L_[i] * L_[j];
    H_ = M::Zero(n_, n_);
    K_ = M::Zero(n_, n_);
    T_ = M::Zero(n_, n_);
    U_ = M::Zero(n_, n_);
    Kraus_ = M::Zero(n_, n_);
    c_.resize(d_);
    set_control(Vec::Zero(model.controls()));
  }

  void set_control(const Vec& u) {
    require(u.size() == model_.controls(), ErrorKind::DimensionMismatch, "control vector has wrong length");
    H_ = model_.H0;
    for (Index k = 0; k < u.size(); ++k) H_ += u(k) * M(model_.H_controls[static_cast<std::size_t>(k)]);
    K_ = (kI / model_.hbar) * H_ + 0.5 * S_;
  }

  /// <rho, L_i + L_i^*> for every channel.
  const Vec& output_means(const M& rho) {
    for (Index i = 0; i < d_; ++i) c_(i) = 2.0 * (L_[static_cast<std::size_t>(i)].cwiseProduct(rho.transpose())).sum().real();
    return c_;
  }

  /// Advances rho in place; returns |Tr - 1| after normalization.
  double step(M& rho, const Vec& dY) {
    if (scheme_ == SmeScheme::Euler) {
      euler(rho, dY);
    } else {
      kraus(rho, dY);
    }
    hermitize(rho);
    const double tr = rho.trace().real();
    if (!std::isfinite(tr) || tr <= 0.0) throw Error(ErrorKind::NonFinite, "filter state lost its trace");
    rho /= tr;
    return std::abs(rho.trace().real() - 1.0);
  }

 private:
  void euler(M& rho, const Vec& dY) {
    output_means(rho);
    // drift: -K rho - rho K^* + sum L rho L^*
    T_.noalias() = K_ * rho;
    U_ = rho;
    U_ -= dt_ * (T_ + T_.adjoint());
    for (std::size_t i = 0; i < L_.size(); ++i) {
      T_.noalias() = L_[i] * rho;
      Kraus_.noalias() = T_ * Ld_[i];
      U_ += dt_ * Kraus_;
      const double innov = dY(static_cast<Index>(i)) - c_(static_cast<Index>(i)) * dt_;
      U_ += innov * (T_ + T_.adjoint() - c_(static_cast<Index>(i)) * rho);
    }
    rho = U_;
  }

  void kraus(M& rho, const Vec& dY) {
    Kraus_ = M::Identity(n_, n_) - dt_ * K_;
    const auto du = L_.size();
    for (std::size_t i = 0; i < du; ++i) {
      const double yi = dY(static_cast<Index>(i));
      Kraus_ += yi * L_[i];
      for (std::size_t j = 0; j < du; ++j) {
        const double w = yi * dY(static_cast<Index>(j)) - (i == j ? dt_ : 0.0);
        Kraus_ += (0.5 * w) * LL_[i * du + j];
      }
    }
    T_.noalias() = Kraus_ * rho;
    rho.noalias() = T_ * Kraus_.adjoint();
  }

  const FiniteModel& model_;
  SmeScheme scheme_;
  double dt_;
  Index n_, d_;
  std::vector<M> L_, Ld_, LL_;
  M S_, H_, K_, T_, U_, Kraus_;
  Vec c_;
};

template <typename M>
M sme_step_impl(const CMat& rho, const FiniteModel& model, const Vec& u, const Vec& dY, double dt,
                SmeScheme scheme) {
  Stepper<M> stepper(model, scheme, dt);
  stepper.set_control(u);
  M r = rho;
  stepper.step(r, dY);
  return r;
}

void check_step_inputs(const DensityMatrix& rho, const FiniteModel& model, const Vec& dY, double dt) {
  model.validate();
  require(rho.dim() == model.dim(), ErrorKind::DimensionMismatch, "state and model dimensions differ");
  require(dY.size() == model.channels(), ErrorKind::DimensionMismatch, "dY must have one entry per channel");
  require(dY.allFinite(), ErrorKind::NonFinite, "dY has non-finite entries");
  require(std::isfinite(dt) && dt > 0.0, ErrorKind::InvalidParameter, "dt must be positive");
}

}  // namespace

DensityMatrix sme_step(const DensityMatrix& rho, const FiniteModel& model, const Vec& u, const Vec& dY, double dt,
                       SmeScheme scheme) {
  check_step_inputs(rho, model, dY, dt);
  CMat next = sme_step_impl<CMat>(rho.matrix(), model, u, dY, dt, scheme);
  check_positive(min_eig(next));
  return DensityMatrix(std::move(next), -kPositivityLossThreshold);
}

ControlPolicy zero_policy(const FiniteModel& model) {
  const Index k = model.controls();
  return [k](double, const CMat&) { return Vec::Zero(k); };
}

void SmeConfig::validate() const {
  grid.validate();
  require(record_stride >= 1 && grid.n_steps % record_stride == 0, ErrorKind::ConfigError,
          "record_stride must be positive and divide n_steps");
}

namespace {

template <typename M>
SmeTrajectory run_trajectory(const CMat& rho0, const FiniteModel& model, const ControlPolicy& policy,
                             const SmeConfig& config, std::uint64_t stream, bool record) {
  const TimeGrid& grid = config.grid;
  const double h = grid.dt();
  const double sqrt_h = std::sqrt(h);
  const Index d = model.channels();
  Stepper<M> stepper(model, config.scheme, h);
  NormalStream normal(config.seed, stream);

  SmeTrajectory out;
  M rho = rho0;
  Vec dY = Vec::Zero(d);
  Vec u = policy(grid.t0, rho0);
  const bool has_cost = config.cost.has_value();
  const M cost_x = has_cost ? M(config.cost->X) : M();
  auto cost_at = [&](const Vec& uu) { return real_trace_product(rho, cost_x) + uu.squaredNorm(); };
  double prev_cost = has_cost ? cost_at(u) : 0.0;
  out.min_eigenvalue = min_eig(rho);
  out.max_trace_deviation = std::abs(rho.trace().real() - 1.0);
  auto push = [&](int k) {
    if (record && k % config.record_stride == 0) out.samples.push_back(SmeSample{grid.time(k), CMat(rho), dY, u});
  };
  push(0);
  for (int k = 0; k < grid.n_steps; ++k) {
    stepper.set_control(u);
    const Vec& c = stepper.output_means(rho);
    for (Index i = 0; i < d; ++i) dY(i) = c(i) * h + sqrt_h * normal();
    const double dev = stepper.step(rho, dY);
    const double lambda = min_eig(rho);
    check_positive(lambda);
    out.min_eigenvalue = std::min(out.min_eigenvalue, lambda);
    out.max_trace_deviation = std::max(out.max_trace_deviation, dev);
    const double t = grid.time(k + 1);
    if (model.controls() > 0) u = policy(t, CMat(rho));
    if (has_cost) {
      const double now = cost_at(u);
      out.running_cost += 0.5 * h * (prev_cost + now);
      prev_cost = now;
    }
    push(k + 1);
  }
  if (!record) out.samples.push_back(SmeSample{grid.t1, CMat(rho), dY, u});
  return out;
}

SmeTrajectory dispatch(const CMat& rho0, const FiniteModel& model, const ControlPolicy& policy,
                       const SmeConfig& config, std::uint64_t stream, bool record) {
  if (model.dim() == 2) return run_trajectory<Eigen::Matrix2cd>(rho0, model, policy, config, stream, record);
  return run_trajectory<CMat>(rho0, model, policy, config, stream, record);
}

void check_simulation(const DensityMatrix& rho0, const FiniteModel& model, const ControlPolicy& policy,
                      const SmeConfig& config) {
  model.validate();
  config.validate();
  require(rho0.dim() == model.dim(), ErrorKind::DimensionMismatch, "state and model dimensions differ");
  require(static_cast<bool>(policy), ErrorKind::ConfigError, "control policy is empty");
  if (config.cost) {
    require(config.cost->X.rows() == model.dim() && config.cost->X.cols() == model.dim(),
            ErrorKind::DimensionMismatch, "cost observable has wrong dimension");
    require(is_hermitian(config.cost->X, 1e-12), ErrorKind::InvalidParameter, "cost observable is not Hermitian");
  }
}

}  // namespace

SmeTrajectory simulate_sme_trajectory(const DensityMatrix& rho0, const FiniteModel& model,
                                      const ControlPolicy& policy, const SmeConfig& config, std::uint64_t stream) {
  check_simulation(rho0, model, policy, config);
  return dispatch(rho0.matrix(), model, policy, config, stream, true);
}

SmeEnsemble simulate_sme_ensemble(const DensityMatrix& rho0, const FiniteModel& model, const ControlPolicy& policy,
                                  const SmeConfig& config, int n_traj, int threads) {
  check_simulation(rho0, model, policy, config);
  require(n_traj >= 1, ErrorKind::ConfigError, "n_traj must be at least 1");
  const auto n = static_cast<std::size_t>(n_traj);
  std::vector<SmeTrajectory> runs(n);
  parallel_for(n, thread_count(threads), [&](std::size_t i) {
    runs[i] = dispatch(rho0.matrix(), model, policy, config, i, false);
  });
  SmeEnsemble out;
  out.mean_final = CMat::Zero(model.dim(), model.dim());
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  out.finals.reserve(n);
  for (auto& r : runs) {
    out.finals.push_back(std::move(r.samples.back().rho));
    out.mean_final += out.finals.back();
    out.min_eigenvalue = std::min(out.min_eigenvalue, r.min_eigenvalue);
    out.max_trace_deviation = std::max(out.max_trace_deviation, r.max_trace_deviation);
  }
  out.mean_final /= static_cast<double>(n);
  return out;
}

std::vector<CMat> master_flow(const DensityMatrix& rho0, const FiniteModel& model, const TimeGrid& grid,
                              const Vec& u) {
  grid.validate();
  std::vector<CMat> out;
  out.reserve(static_cast<std::size_t>(grid.size()));
  DensityMatrix rho = rho0;
  out.push_back(rho.matrix());
  for (int k = 0; k < grid.n_steps; ++k) {
    rho = master_step(rho, model, u, grid.dt());
    out.push_back(rho.matrix());
  }
  return out;
}

std::string sme_trajectory_csv(const SmeTrajectory& traj, const std::vector<CMat>& observables, bool include_rho) {
  std::string out = "t";
  const SmeSample* first = traj.samples.empty() ? nullptr : &traj.samples.front();
  const Index n = first ? first->rho.rows() : 0;
  for (std::size_t j = 0; j < observables.size(); ++j) out += ",obs_" + std::to_string(j);
  if (first) {
    for (Index i = 0; i < first->dY.size(); ++i) out += ",dY_" + std::to_string(i);
    for (Index i = 0; i < first->u.size(); ++i) out += ",u_" + std::to_string(i);
  }
  if (include_rho)
    for (Index a = 0; a < n; ++a)
      for (Index b = 0; b < n; ++b) {
        const std::string ij = std::to_string(a) + "_" + std::to_string(b);
        out += ",re_" + ij + ",im_" + ij;
      }
  out += '\n';
  std::vector<double> row;
  for (const SmeSample& s : traj.samples) {
    row.assign(1, s.t);
    for (const CMat& x : observables) {
      require(x.rows() == n && x.cols() == n, ErrorKind::DimensionMismatch, "observable has wrong dimension");
      row.push_back(real_trace_product(s.rho, x));
    }
    row.insert(row.end(), s.dY.data(), s.dY.data() + s.dY.size());
    row.insert(row.end(), s.u.data(), s.u.data() + s.u.size());
    if (include_rho)
      for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b) {
          row.push_back(s.rho(a, b).real());
          row.push_back(s.rho(a, b).imag());
        }
    out += csv_row(row);
  }
  return out;
}

std::vector<ConditioningOutcome> discrete_conditioning(const DensityMatrix& rho, const CMat& U,
                                                       const std::vector<CMat>& projectors, const CVec& phi) {
  const Index n = rho.dim();
  const Index na = phi.size();
  require(na >= 1, ErrorKind::DimensionMismatch, "ancilla state is empty");
  require(std::abs(phi.norm() - 1.0) <= 1e-10, ErrorKind::InvalidParameter, "ancilla state must be normalized");
  require(U.rows() == n * na && U.cols() == n * na, ErrorKind::DimensionMismatch,
          "coupling unitary must act on system x ancilla");
  require(max_abs(U.adjoint() * U - CMat::Identity(n * na, n * na)) <= 1e-10, ErrorKind::NotUnitary,
          "coupling operator is not unitary");
  require(!projectors.empty(), ErrorKind::NotAProjectorFamily, "projector family is empty");
  CMat total = CMat::Zero(na, na);
  for (std::size_t i = 0; i < projectors.size(); ++i) {
    const CMat& p = projectors[i];
    require(p.rows() == na && p.cols() == na, ErrorKind::DimensionMismatch, "projector has wrong dimension");
    require(is_hermitian(p, 1e-10) && max_abs(p * p - p) <= 1e-10, ErrorKind::NotAProjectorFamily,
            "family member is not an orthogonal projector");
    for (std::size_t j = 0; j < i; ++j)
      require(max_abs(p * projectors[j]) <= 1e-10, ErrorKind::NotAProjectorFamily,
              "projectors are not mutually orthogonal");
    total += p;
  }
  require(max_abs(total - CMat::Identity(na, na)) <= 1e-10, ErrorKind::NotAProjectorFamily,
          "projectors do not sum to the identity");

  const CMat joint = U * Eigen::kroneckerProduct(rho.matrix(), CMat(phi * phi.adjoint())).eval() * U.adjoint();
  std::vector<ConditioningOutcome> out;
  out.reserve(projectors.size());
  for (const CMat& p : projectors) {
    const CMat ip = Eigen::kroneckerProduct(CMat::Identity(n, n), p);
    const CMat selected = ip * joint * ip;
    CMat reduced = CMat::Zero(n, n);
    for (Index s = 0; s < n; ++s)
      for (Index t = 0; t < n; ++t)
        for (Index a = 0; a < na; ++a) reduced(s, t) += selected(s * na + a, t * na + a);
    ConditioningOutcome o;
    o.probability = std::max(0.0, reduced.trace().real());
    if (o.probability > 1e-14) {
      CMat post = reduced / o.probability;
      hermitize(post);
      post /= post.trace().real();
      o.posterior.emplace(std::move(post));
    }
    out.push_back(std::move(o));
  }
  return out;
}

namespace {

/// Operator `op` on ancilla qubit i of d, identity elsewhere.
CMat on_qubit(const CMat& op, Index i, Index d) {
  CMat out = CMat::Identity(1, 1);
  for (Index q = 0; q < d; ++q) out = Eigen::kroneckerProduct(out, q == i ? op : CMat(CMat::Identity(2, 2))).eval();
  return out;
}

}  // namespace

CMat weak_measurement_unitary(const FiniteModel& model, const Vec& u, double dt) {
  model.validate();
  require(std::isfinite(dt) && dt > 0.0, ErrorKind::InvalidParameter, "dt must be positive");
  const Index d = model.channels();
  require(d <= 8, ErrorKind::InvalidParameter, "ancilla model supports at most 8 channels");
  const Index na = Index{1} << d;
  CMat raise = CMat::Zero(2, 2);
  raise(1, 0) = 1.0;
  const CMat lower = raise.adjoint();
  CMat gen = Eigen::kroneckerProduct(CMat((-kI * dt / model.hbar) * model.hamiltonian(u)), CMat::Identity(na, na));
  const double s = std::sqrt(dt);
  for (Index i = 0; i < d; ++i) {
    const CMat& l = model.L_list[static_cast<std::size_t>(i)];
    gen += s * (Eigen::kroneckerProduct(l, on_qubit(raise, i, d)) -
                Eigen::kroneckerProduct(CMat(l.adjoint()), on_qubit(lower, i, d)))
                   .eval();
  }
  return gen.exp();
}

std::vector<WeakOutcome> weak_measurement_step(const DensityMatrix& rho, const FiniteModel& model, const Vec& u,
                                               double dt) {
  require(rho.dim() == model.dim(), ErrorKind::DimensionMismatch, "state and model dimensions differ");
  const CMat U = weak_measurement_unitary(model, u, dt);
  const Index d = model.channels();
  const Index na = Index{1} << d;
  CVec phi = CVec::Zero(na);
  phi(0) = 1.0;
  const double r = 1.0 / std::sqrt(2.0);
  CVec plus(2), minus(2);
  plus << r, r;
  minus << r, -r;
  std::vector<CMat> projectors;
  std::vector<Vec> increments;
  for (Index mask = 0; mask < na; ++mask) {
    CVec v = CVec::Ones(1);
    Vec dY(d);
    for (Index i = 0; i < d; ++i) {
      const bool neg = (mask >> (d - 1 - i)) & 1;
      v = Eigen::kroneckerProduct(v, neg ? minus : plus).eval();
      dY(i) = neg ? -std::sqrt(dt) : std::sqrt(dt);
    }
    projectors.push_back(v * v.adjoint());
    increments.push_back(dY);
  }
  const auto outcomes = discrete_conditioning(rho, U, projectors, phi);
  std::vector<WeakOutcome> out;
  out.reserve(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) out.push_back(WeakOutcome{increments[i], outcomes[i]});
  return out;
}

CMat pauli_x() {
  CMat s(2, 2);
  s << 0.0, 1.0, 1.0, 0.0;
  return s;
}

CMat pauli_y() {
  CMat s(2, 2);
  s << 0.0, -kI, kI, 0.0;
  return s;
}

CMat pauli_z() {
  CMat s(2, 2);
  s << 1.0, 0.0, 0.0, -1.0;
  return s;
}

FiniteModel qubit_dephasing_model(double rate) {
  require(std::isfinite(rate) && rate >= 0.0, ErrorKind::InvalidParameter, "rate must be non-negative");
  FiniteModel m;
  m.H0 = CMat::Zero(2, 2);
  m.L_list.push_back(std::sqrt(rate) * pauli_z());
  m.hbar = 1.0;
  return m;
}

}  // namespace qlqg
