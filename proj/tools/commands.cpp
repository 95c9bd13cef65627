#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "qlqg/csv.hpp"

namespace qlqg::cli {

namespace fs = std::filesystem;

namespace {

Json complex_to_json(const CMat& z) { return Json{{"re", matrix_to_json(z.real())}, {"im", matrix_to_json(z.imag())}}; }

Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorKind::ConfigError, "cannot create output directory " + dir);
  return dir;
}

void write_json(const std::string& file, const Json& j) { write_text_file(file, j.dump(2) + "\n"); }

Scenario scenario_from(const Options& opts) {
  require(!opts.scenario.empty(), ErrorKind::ConfigError, "--scenario is required for this command");
  return load_scenario(opts.scenario);
}

std::uint64_t effective_seed(const Options& opts, std::uint64_t fallback) { return opts.seed.value_or(fallback); }

int effective_n_traj(const Options& opts, int fallback) {
  if (!opts.n_traj) return fallback;
  require(*opts.n_traj >= 1 && *opts.n_traj <= 2'000'000'000LL, ErrorKind::ConfigError,
          "--n-traj must be a positive integer");
  return static_cast<int>(*opts.n_traj);
}

}  // namespace

std::string output_dir(const Options& opts, const Scenario* scenario) {
  if (opts.out) return *opts.out;
  if (scenario && scenario->out_dir) return *scenario->out_dir;
  return "qlqg-out";
}

int cmd_build(const Options& opts, std::ostream& out) {
  const Scenario s = scenario_from(opts);
  const LinearCoefficients c = build_coefficients(s.require_model());
  Json j = coefficients_to_json(c);
  j["hbar"] = s.require_model().hbar;
  out << j.dump(2) << "\n";
  if (opts.out || s.out_dir) write_json(prepare_dir(output_dir(opts, &s)) + "/coefficients.json", j);
  return kExitOk;
}

int cmd_riccati(const Options& opts, std::ostream& out) {
  const Scenario s = scenario_from(opts);
  const LinearCoefficients c = build_coefficients(s.require_model());
  const TimeGrid& grid = s.require_grid();
  const bool dual = opts.dual;
  MatrixPath path;
  std::string name;
  if (s.direction == RiccatiDirection::Filter) {
    const Mat& sigma0 = s.require_initial().cov;
    name = "filter";
    if (dual) {
      FilterProblem f{c.A, c.C, c.N, c.M, sigma0, grid.t1 - grid.t0};
      path = filter_riccati_via_duality(f, grid, s.dual_permutation);
    } else {
      path = integrate_filter_riccati(c, sigma0, grid);
    }
  } else {
    const CostSpec& cost = s.require_cost();
    name = "control";
    if (dual) {
      ControlProblem p{c.A, c.B, cost.F, cost.G, cost.Omega_T, grid.t1 - grid.t0};
      path = control_riccati_via_duality(p, grid, s.dual_permutation);
    } else {
      path = integrate_control_riccati(c, cost, grid);
    }
  }
  const std::string dir = prepare_dir(output_dir(opts, &s));
  const std::string file = dir + "/" + name + ".csv";
  write_path_csv(path, file, "S");
  Json j;
  j["direction"] = name;
  j["dual"] = dual;
  j["csv"] = file;
  j["n_steps"] = grid.n_steps;
  j["initial"] = matrix_to_json(path.front());
  j["final"] = matrix_to_json(path.back());
  j["min_uncertainty_eigenvalue"] = nullable(path.min_uncertainty_eigenvalue);
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_simulate(const Options& opts, std::ostream& out) {
  const Scenario s = scenario_from(opts);
  const LinearCoefficients c = build_coefficients(s.require_model());
  const CostSpec& cost = s.require_cost();
  const GaussianBelief& initial = s.require_initial();
  SimConfig cfg;
  cfg.grid = s.require_grid();
  cfg.n_traj = effective_n_traj(opts, s.sim.n_traj);
  cfg.seed = effective_seed(opts, s.sim.seed);
  cfg.record_stride = s.sim.record_stride;
  cfg.threads = s.sim.threads;
  cfg.keep_records = false;
  cfg.validate();

  const ClosedLoopPlan plan = ClosedLoopPlan::make(c, cost, initial, cfg.grid);
  const Ensemble ens = simulate_closed_loop(plan, cfg);
  const CostEstimate est = monte_carlo_expected_cost(ens);
  const double analytic = plan.analytic_cost();
  const double z = (est.mean - analytic) / est.std_error;

  const std::string dir = prepare_dir(output_dir(opts, &s));
  Json summary;
  summary["mean_cost"] = est.mean;
  summary["stderr"] = nullable(est.std_error);
  summary["n_traj"] = cfg.n_traj;
  summary["seed"] = cfg.seed;
  summary["analytic_cost"] = analytic;
  summary["z_score"] = nullable(z);
  write_json(dir + "/summary.json", summary);

  std::string gains = "t";
  for (Index i = 0; i < plan.gains.gains.front().rows(); ++i)
    for (Index j = 0; j < plan.gains.gains.front().cols(); ++j)
      gains += ",L_" + std::to_string(i) + "_" + std::to_string(j);
  gains += "\n";
  std::vector<double> row;
  for (int k = 0; k <= cfg.grid.n_steps; k += cfg.record_stride) {
    row.assign(1, cfg.grid.time(k));
    const Mat& L = plan.gains.at(k);
    for (Index i = 0; i < L.rows(); ++i)
      for (Index j = 0; j < L.cols(); ++j) row.push_back(L(i, j));
    gains += csv_row(row);
  }
  write_text_file(dir + "/gains.csv", gains);

  const int n_write = std::min(s.sim.write_trajectories, cfg.n_traj);
  if (n_write > 0) {
    SimConfig rec = cfg;
    rec.n_traj = n_write;
    rec.keep_records = true;
    const Ensemble recorded = simulate_closed_loop(plan, rec);
    for (int i = 0; i < n_write; ++i)
      write_text_file(dir + "/trajectory_" + std::to_string(i) + ".csv",
                      trajectory_csv(recorded.trajectories[static_cast<std::size_t>(i)]));
  }
  out << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_sme(const Options& opts, std::ostream& out) {
  const Scenario s = scenario_from(opts);
  require(s.sme.has_value(), ErrorKind::ConfigError, "scenario has no \"sme\" section");
  const SmeSettings& st = *s.sme;
  const DensityMatrix rho0(st.rho0);
  SmeConfig cfg;
  cfg.grid = st.grid;
  cfg.seed = effective_seed(opts, st.seed);
  cfg.record_stride = st.record_stride;
  cfg.scheme = st.scheme;
  if (st.cost_observable) cfg.cost = SmeCost{*st.cost_observable};
  const int n_traj = effective_n_traj(opts, st.n_traj);
  const ControlPolicy policy = zero_policy(st.model);

  const SmeEnsemble ens = simulate_sme_ensemble(rho0, st.model, policy, cfg, n_traj, s.sim.threads);
  const std::vector<CMat> flow = master_flow(rho0, st.model, cfg.grid, Vec::Zero(st.model.controls()));

  const std::string dir = prepare_dir(output_dir(opts, &s));
  const SmeTrajectory first = simulate_sme_trajectory(rho0, st.model, policy, cfg, 0);
  const bool include_rho = st.include_rho || st.observables.empty();
  write_text_file(dir + "/sme_trajectory_0.csv", sme_trajectory_csv(first, st.observables, include_rho));

  Json summary;
  summary["n_traj"] = n_traj;
  summary["seed"] = cfg.seed;
  summary["scheme"] = st.scheme == SmeScheme::Euler ? "euler" : "kraus";
  summary["t1"] = cfg.grid.t1;
  summary["min_eigenvalue"] = ens.min_eigenvalue;
  summary["max_trace_deviation"] = ens.max_trace_deviation;
  summary["mean_final"] = complex_to_json(ens.mean_final);
  summary["master_final"] = complex_to_json(flow.back());
  summary["trace_distance_to_master"] = trace_distance(ens.mean_final, flow.back());
  if (cfg.cost) summary["running_cost_first_trajectory"] = first.running_cost;
  write_json(dir + "/sme_summary.json", summary);
  out << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_free_particle(const Options& opts, std::ostream& out) {
  double mass = 1.0, hbar = 1.0, beta = 1.0;
  Mat sigma0 = 2.0 * Mat::Identity(2, 2);
  std::optional<Scenario> s;
  if (!opts.scenario.empty()) {
    s = load_scenario(opts.scenario);
    const PhaseSpaceModel& m = s->require_model();
    require(m.dim() == 2 && m.channels() == 1, ErrorKind::ConfigError,
            "free-particle expects a two-dimensional single-channel model");
    hbar = m.hbar;
    mass = 1.0 / m.R(1, 1);
    if (s->initial) sigma0 = s->initial->cov;
    if (s->cost) beta = s->cost->F(0, 0);
  }
  const PhaseSpaceModel model = free_particle_model(mass, hbar);
  const LinearCoefficients c = build_coefficients(model);

  const MatrixPath filter = integrate_filter_riccati(c, sigma0, TimeGrid::with_step(20.0, 1e-3));
  const Mat& sf = filter.back();
  const double q_ref = 0.5 * std::sqrt(hbar / mass), qp_ref = 0.5 * hbar, p_ref = hbar * std::sqrt(hbar * mass);
  const double filter_err =
      std::max({std::abs(sf(0, 0) - q_ref), std::abs(sf(0, 1) - qp_ref), std::abs(sf(1, 1) - p_ref)});
  const double product = std::sqrt(sf(0, 0) * sf(1, 1));

  const double T = 5.0;
  const MatrixPath uncond = lyapunov_unconditional(c, sigma0, TimeGrid::with_step(T, 1e-3));
  const double cubic = sigma0(0, 0) + 2.0 * sigma0(0, 1) * T / mass + sigma0(1, 1) * T * T / (mass * mass) +
                       hbar * hbar * T * T * T / (3.0 * mass * mass);
  const double cubic_err = std::abs(uncond.back()(0, 0) - cubic);

  CostSpec cost{Mat::Zero(2, 2), Mat::Zero(1, 2), Mat::Zero(2, 2)};
  cost.F(0, 0) = beta;
  const TimeGrid cgrid = TimeGrid::with_step(20.0, 1e-3);
  const Mat w_phys = integrate_control_riccati(c, cost, cgrid).front();
  LinearCoefficients doubled = c;
  doubled.B *= 2.0;
  const Mat w_doubled = integrate_control_riccati(doubled, cost, cgrid).front();
  const double wqp = std::sqrt(beta), wp = std::sqrt(2.0 * wqp / mass);
  const double wqp2 = 0.5 * std::sqrt(beta), wp2 = std::sqrt(wqp2 / (2.0 * mass));
  auto triple = [](double a, double b, double d) { return Json::array({a, b, d}); };
  auto err3 = [](const Mat& w, double a, double b, double d) {
    return std::max({std::abs(w(0, 0) - a), std::abs(w(0, 1) - b), std::abs(w(1, 1) - d)});
  };
  const double phys_err = err3(w_phys, mass * wqp * wp, wqp, wp);
  const double doubled_err = err3(w_doubled, 4.0 * mass * wp2 * wqp2, wqp2, wp2);

  const bool pass = filter_err <= 1e-6 && std::abs(product - hbar / std::sqrt(2.0)) <= 1e-6 &&
                    filter.min_uncertainty_eigenvalue >= -1e-8 && cubic_err <= 1e-8 && phys_err <= 1e-6 &&
                    doubled_err <= 1e-6;

  Json j;
  j["mass"] = mass;
  j["hbar"] = hbar;
  j["beta"] = beta;
  j["filter"] = {{"numeric", triple(sf(0, 0), sf(0, 1), sf(1, 1))},
                 {"closed_form", triple(q_ref, qp_ref, p_ref)},
                 {"max_error", filter_err},
                 {"uncertainty_product", product},
                 {"uncertainty_product_closed_form", hbar / std::sqrt(2.0)},
                 {"min_uncertainty_eigenvalue", filter.min_uncertainty_eigenvalue}};
  j["unconditional"] = {{"t", T}, {"sigma_Q", uncond.back()(0, 0)}, {"closed_form", cubic}, {"error", cubic_err}};
  j["control"] = {
      {"input_coupling", {{"B", Json::array({0.0, 1.0})},
                          {"numeric", triple(w_phys(0, 0), w_phys(0, 1), w_phys(1, 1))},
                          {"closed_form", triple(mass * wqp * wp, wqp, wp)},
                          {"max_error", phys_err}}},
      {"doubled_coupling", {{"B", Json::array({0.0, 2.0})},
                            {"numeric", triple(w_doubled(0, 0), w_doubled(0, 1), w_doubled(1, 1))},
                            {"closed_form", triple(4.0 * mass * wp2 * wqp2, wqp2, wp2)},
                            {"max_error", doubled_err}}}};
  j["pass"] = pass;

  const std::string dir = prepare_dir(output_dir(opts, s ? &*s : nullptr));
  write_path_csv(filter, dir + "/free_particle_filter.csv", "S");
  write_path_csv(uncond, dir + "/free_particle_unconditional.csv", "S");
  write_json(dir + "/free_particle.json", j);
  out << j.dump(2) << "\n";
  return pass ? kExitOk : kExitNumerical;
}

int run(int argc, char** argv) {
  CLI::App app{"Quantum LQG filtering and control toolkit"};
  app.require_subcommand(1);
  Options opts;
  std::string command;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"build", "print the linear coefficients A, B, C, N, M"},
      {"riccati", "integrate the filter or control Riccati equation"},
      {"simulate", "Monte-Carlo closed-loop cost versus the analytic optimum"},
      {"sme", "simulate the finite-dimensional filtering equation"},
      {"free-particle", "free-particle reproduction report"},
      {"validate", "run the invariant suites"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", opts.scenario, "scenario JSON file");
    sub->add_option("--seed", opts.seed, "master RNG seed");
    sub->add_option("--out", opts.out, "output directory");
    sub->add_flag("--dual", opts.dual, "solve through the filter/control duality");
    sub->add_option("--n-traj", opts.n_traj, "number of trajectories");
    sub->callback([&command, name = name] { command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (command == "build") return cmd_build(opts, std::cout);
    if (command == "riccati") return cmd_riccati(opts, std::cout);
    if (command == "simulate") return cmd_simulate(opts, std::cout);
    if (command == "sme") return cmd_sme(opts, std::cout);
    if (command == "free-particle") return cmd_free_particle(opts, std::cout);
    if (command == "validate") return cmd_validate(opts, std::cout);
  } catch (const Error& e) {
    std::cerr << "qlqg " << command << ": " << e.what() << "\n";
    return is_input_error(e.kind()) ? kExitInput : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "qlqg " << command << ": internal error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitInput;
}

}  // namespace qlqg::cli
