#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "qlqg/csv.hpp"

namespace qlqg::cli {

namespace {

struct SuiteResult {
  bool pass = true;
  std::string detail;
};

class Report {
 public:
  void check(SuiteResult& r, bool ok, const std::string& what, double value) {
    if (!ok) r.pass = false;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += what + "=" + format_double(value) + (ok ? "" : " (FAILED)");
  }
};

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Mat random_matrix(std::mt19937_64& rng, Index r, Index c, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

Mat random_psd(std::mt19937_64& rng, Index m, double scale) {
  const Mat v = random_matrix(rng, m, m, scale);
  return v * v.transpose();
}

SuiteResult suite_gaussian_model() {
  SuiteResult r;
  Report rep;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> half(1, 3), chan(1, 3), ctrl(1, 2);
  double worst_sym = 0.0, worst_psd = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index m = 2 * half(rng), d = chan(rng), k = ctrl(rng);
    PhaseSpaceModel model;
    model.J = standard_symplectic(m);
    model.R = random_psd(rng, m, 0.5);
    model.Lambda = CMat(d, m);
    model.Lambda.real() = random_matrix(rng, d, m, 1.0);
    model.Lambda.imag() = random_matrix(rng, d, m, 1.0);
    model.K = CMat(m, k);
    model.K.real() = random_matrix(rng, m, k, 1.0);
    model.K.imag() = random_matrix(rng, m, k, 1.0);
    model.hbar = 0.5 + std::uniform_real_distribution<double>(0.0, 1.5)(rng);
    const LinearCoefficients c = build_coefficients(model);
    worst_sym = std::max(worst_sym, max_abs(c.N - c.N.transpose()));
    const double scale = std::max(1.0, max_abs(c.N));
    worst_psd = std::min(worst_psd, Eigen::SelfAdjointEigenSolver<Mat>(c.N).eigenvalues().minCoeff() / scale);
  }
  rep.check(r, worst_sym == 0.0, "N asymmetry", worst_sym);
  rep.check(r, worst_psd >= -1e-12, "min scaled eig(N)", worst_psd);

  const LinearCoefficients fp = build_coefficients(free_particle_model(1.0, 1.0));
  Mat A(2, 2), B(2, 1), C(1, 2), N(2, 2);
  A << 0, 1, 0, 0;
  B << 0, 1;
  C << 2, 0;
  N << 0, 0, 0, 1;
  const double fp_err = std::max({max_abs(fp.A - A), max_abs(fp.B - B), max_abs(fp.C - C), max_abs(fp.N - N),
                                  max_abs(fp.M)});
  rep.check(r, fp_err <= 1e-14, "free-particle coefficient error", fp_err);
  return r;
}

SuiteResult suite_riccati() {
  SuiteResult r;
  Report rep;
  const Mat sigma0 = 2.0 * Mat::Identity(2, 2);
  for (const auto& [hbar, mass] : std::vector<std::pair<double, double>>{{1, 1}, {1, 2}, {2, 1}}) {
    const LinearCoefficients c = build_coefficients(free_particle_model(mass, hbar));
    const MatrixPath p = integrate_filter_riccati(c, sigma0, TimeGrid::with_step(20.0, 1e-3));
    const Mat& s = p.back();
    const double err = std::max({std::abs(s(0, 0) - 0.5 * std::sqrt(hbar / mass)), std::abs(s(0, 1) - 0.5 * hbar),
                                 std::abs(s(1, 1) - hbar * std::sqrt(hbar * mass))});
    const std::string tag = "(hbar=" + format_double(hbar) + ",M=" + format_double(mass) + ")";
    rep.check(r, err <= 1e-6, "stationary error " + tag, err);
    const double prod = std::sqrt(s(0, 0) * s(1, 1));
    rep.check(r, std::abs(prod - hbar / std::sqrt(2.0)) <= 1e-6, "uncertainty product error " + tag,
              std::abs(prod - hbar / std::sqrt(2.0)));
    rep.check(r, p.min_uncertainty_eigenvalue >= -1e-8, "min Heisenberg eig " + tag, p.min_uncertainty_eigenvalue);
  }

  const LinearCoefficients c = build_coefficients(free_particle_model(1.0, 1.0));
  Mat s0(2, 2);
  s0 << 1.0, 0.3, 0.3, 0.7;
  const double T = 5.0;
  const MatrixPath u = lyapunov_unconditional(c, s0, TimeGrid::with_step(T, 1e-3));
  const double cubic = s0(0, 0) + 2 * s0(0, 1) * T + s0(1, 1) * T * T + T * T * T / 3.0;
  rep.check(r, std::abs(u.back()(0, 0) - cubic) <= 1e-8, "cubic spreading error", std::abs(u.back()(0, 0) - cubic));

  const double horizon = 2.0;
  const Mat ref = integrate_filter_riccati(c, sigma0, TimeGrid::make(0, horizon, 12800)).back();
  std::vector<double> lx, ly;
  for (int n : {200, 400, 800}) {
    const Mat e = integrate_filter_riccati(c, sigma0, TimeGrid::make(0, horizon, n)).back() - ref;
    lx.push_back(std::log(horizon / n));
    ly.push_back(std::log(max_abs(e)));
  }
  const double sl = slope(lx, ly);
  rep.check(r, sl >= 3.5, "RK4 order slope", sl);
  return r;
}

SuiteResult suite_duality() {
  SuiteResult r;
  Report rep;
  std::mt19937_64 rng(23);
  const TimeGrid grid = TimeGrid::with_step(2.0, 1e-3);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ControlProblem p;
    p.A = random_matrix(rng, 4, 4, 0.5);
    p.B = random_matrix(rng, 4, 2, 0.5);
    p.F = random_psd(rng, 4, 0.5);
    p.G = random_matrix(rng, 2, 4, 0.2);
    p.Omega_T = random_psd(rng, 4, 0.5);
    p.horizon = 2.0;
    const MatrixPath direct = integrate_control_riccati(p.coefficients(), p.cost(), grid);
    const MatrixPath viad = control_riccati_via_duality(p, grid);
    for (std::size_t k = 0; k < direct.values.size(); ++k)
      worst = std::max(worst, max_abs(direct.values[k] - viad.values[k]));
  }
  rep.check(r, worst <= 1e-8, "random systems max deviation", worst);

  const LinearCoefficients fp = build_coefficients(free_particle_model(1.0, 1.0));
  FilterProblem f{fp.A, fp.C, fp.N, fp.M, 2.0 * Mat::Identity(2, 2), 2.0};
  const ControlProblem dual = duality_map(f, Permutation{1, 0});
  const MatrixPath direct = integrate_control_riccati(dual.coefficients(), dual.cost(), grid);
  const MatrixPath viad = control_riccati_via_duality(dual, grid, Permutation{1, 0});
  double fp_worst = 0.0;
  for (std::size_t k = 0; k < direct.values.size(); ++k)
    fp_worst = std::max(fp_worst, max_abs(direct.values[k] - viad.values[k]));
  rep.check(r, fp_worst <= 1e-8, "free-particle (Q<->P) max deviation", fp_worst);
  return r;
}

SuiteResult suite_hjb() {
  SuiteResult r;
  Report rep;
  const LinearCoefficients c = build_coefficients(free_particle_model(1.0, 1.0));
  CostSpec cost{Mat::Zero(2, 2), Mat::Zero(1, 2), Mat::Identity(2, 2)};
  cost.F(0, 0) = 1.0;
  const TimeGrid grid = TimeGrid::with_step(5.0, 1e-3);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.5, 2.0), sgn(-1.0, 1.0);
  std::uniform_int_distribution<int> idx(1, grid.n_steps - 1);
  std::normal_distribution<double> nd(0.0, 2.0);
  const MatrixPath omega = integrate_control_riccati(c, cost, grid);
  double worst = 0.0;
  for (int sample = 0; sample < 100; ++sample) {
    const double a = unif(rng), b = unif(rng);
    Mat s0(2, 2);
    s0 << a, 0, 0, b;
    s0(0, 1) = s0(1, 0) = sgn(rng) * std::sqrt(std::max(0.0, a * b - 0.25));
    const MatrixPath sigma = integrate_filter_riccati(c, s0, grid);
    const QuadraticValuePath value{omega, integrate_alpha(omega, sigma, c, cost, Quadrature::EndCorrected)};
    const int k = idx(rng);
    Vec x(2);
    x << nd(rng), nd(rng);
    worst = std::max(worst, hjb_residual(value, k, x, sigma.at(k), c, cost));
  }
  rep.check(r, worst < 1e-6, "max HJB residual", worst);
  return r;
}

SuiteResult suite_optimality(const ValidateInject& inject) {
  SuiteResult r;
  Report rep;
  const LinearCoefficients c = build_coefficients(free_particle_model(1.0, 1.0));
  CostSpec cost{Mat::Zero(2, 2), Mat::Zero(1, 2), Mat::Identity(2, 2)};
  cost.F(0, 0) = 1.0;
  GaussianBelief init{Vec::Zero(2), 0.5 * Mat::Identity(2, 2)};
  init.mean(0) = 1.0;
  SimConfig cfg;
  cfg.grid = TimeGrid::with_step(5.0, 1e-3);
  cfg.n_traj = 10000;
  cfg.seed = 20240601;
  cfg.keep_records = false;
  cfg.threads = 0;
  const ClosedLoopPlan plan = ClosedLoopPlan::make(c, cost, init, cfg.grid);
  const double analytic = plan.analytic_cost();
  auto perturb = [](ClosedLoopPlan p, double delta) {
    for (Mat& L : p.gains.gains) L.array() += delta;
    return p;
  };
  if (inject.gain_perturbation) {
    const Ensemble optimal = simulate_closed_loop(plan, cfg);
    const Ensemble injected = simulate_closed_loop(perturb(plan, *inject.gain_perturbation), cfg);
    const CostEstimate diff = paired_cost_difference(optimal, injected);
    const double ratio = diff.mean / diff.std_error;
    if (ratio >= 3.0) {
      r.pass = false;
      r.detail = "cost increase flagged for injected gain perturbation " + format_double(*inject.gain_perturbation) +
                 ": paired increase/stderr=" + format_double(ratio);
      return r;
    }
    rep.check(r, true, "injected perturbation paired increase/stderr (below 3)", ratio);
    return r;
  }
  const Ensemble base = simulate_closed_loop(plan, cfg);
  const CostEstimate est = monte_carlo_expected_cost(base);
  const double z = (est.mean - analytic) / est.std_error;
  rep.check(r, std::abs(z) <= 3.0, "z-score vs analytic optimum", z);
  const Ensemble worse = simulate_closed_loop(perturb(plan, 0.2), cfg);
  const CostEstimate diff = paired_cost_difference(base, worse);
  rep.check(r, diff.mean >= 3.0 * diff.std_error, "perturbed-gain cost increase / stderr",
            diff.mean / diff.std_error);
  return r;
}

SuiteResult suite_sme(const ValidateInject& inject) {
  SuiteResult r;
  Report rep;
  const FiniteModel qubit = qubit_dephasing_model(1.0);
  CVec plus(2);
  plus << 1.0, 1.0;
  const DensityMatrix rho0 = DensityMatrix::pure(plus);
  if (inject.sme_coarse_dt) {
    SmeConfig coarse;
    coarse.grid = TimeGrid::with_step(5.0, *inject.sme_coarse_dt);
    coarse.scheme = SmeScheme::Euler;
    coarse.seed = 7;
    try {
      simulate_sme_ensemble(rho0, qubit, zero_policy(qubit), coarse, 20);
      r.detail = "coarse Euler fixture completed without positivity loss";
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::PositivityLoss) throw;
      r.pass = false;
      r.detail = std::string("coarse Euler fixture: ") + e.what();
      return r;
    }
  }
  SmeConfig cfg;
  cfg.grid = TimeGrid::with_step(1.0, 1e-4);
  cfg.seed = 99;
  const SmeEnsemble ens = simulate_sme_ensemble(rho0, qubit, zero_policy(qubit), cfg, 5000, 0);
  const std::vector<CMat> flow = master_flow(rho0, qubit, cfg.grid, Vec());
  rep.check(r, ens.max_trace_deviation <= 1e-9, "max trace deviation", ens.max_trace_deviation);
  rep.check(r, ens.min_eigenvalue >= -1e-8, "min eigenvalue", ens.min_eigenvalue);
  const double td = trace_distance(ens.mean_final, flow.back());
  rep.check(r, td <= 0.02, "trace distance ensemble vs master", td);
  double coh = 0.0;
  for (int k = 0; k <= cfg.grid.n_steps; k += 100)
    coh = std::max(coh, std::abs(flow[static_cast<std::size_t>(k)](0, 1) - 0.5 * std::exp(-2.0 * cfg.grid.time(k))));
  rep.check(r, coh <= 1e-4, "coherence decay error", coh);

  FiniteModel generic;
  generic.H0 = 0.5 * pauli_x();
  CMat L(2, 2);
  L << Complex(0.6, 0.1), Complex(0.4, -0.2), Complex(0.1, 0.3), Complex(-0.2, 0.0);
  generic.L_list = {L};
  CMat mixed(2, 2);
  mixed << Complex(0.7, 0.0), Complex(0.2, 0.1), Complex(0.2, -0.1), Complex(0.3, 0.0);
  const DensityMatrix rho(mixed);
  std::vector<double> lx, ly;
  for (double dt : {1e-2, 1e-3, 1e-4, 1e-5}) {
    double err = 0.0;
    for (const WeakOutcome& w : weak_measurement_step(rho, generic, Vec(), dt)) {
      const DensityMatrix sme = sme_step(rho, generic, Vec(), w.dY, dt, SmeScheme::Euler);
      err = std::max(err, trace_norm(w.outcome.posterior->matrix() - sme.matrix()));
    }
    lx.push_back(std::log(dt));
    ly.push_back(std::log(err));
  }
  const double sl = slope(lx, ly);
  rep.check(r, sl >= 1.4, "weak-measurement error slope", sl);
  return r;
}

}  // namespace

int cmd_validate(const Options& opts, std::ostream& out) {
  ValidateInject inject;
  if (!opts.scenario.empty()) inject = load_scenario(opts.scenario).inject;
  const std::vector<std::pair<std::string, std::function<SuiteResult()>>> suites = {
      {"gaussian-model", suite_gaussian_model},
      {"riccati", suite_riccati},
      {"duality", suite_duality},
      {"hjb", suite_hjb},
      {"optimality-probe", [&] { return suite_optimality(inject); }},
      {"sme", [&] { return suite_sme(inject); }},
  };
  bool all = true;
  for (const auto& [name, run_suite] : suites) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult res;
    try {
      res = run_suite();
    } catch (const Error& e) {
      res.pass = false;
      res.detail = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char timing[32];
    std::snprintf(timing, sizeof(timing), "%.2f s", secs);
    out << (res.pass ? "[PASS] " : "[FAIL] ") << name << " (" << timing << ") " << res.detail << "\n";
    all = all && res.pass;
  }
  out << (all ? "all suites passed" : "validation FAILED") << "\n";
  return all ? kExitOk : kExitNumerical;
}

}  // namespace qlqg::cli
