#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qlqg/closed_loop.hpp"
#include "qlqg/lqg_controller.hpp"
#include "qlqg/riccati.hpp"
#include "qlqg/sme.hpp"

namespace py = pybind11;
using namespace qlqg;

namespace {

// Paths are returned as (times, stacked values) with values of shape (n + 1, r, c).
py::tuple path_arrays(const MatrixPath& p) {
  const auto n = static_cast<py::ssize_t>(p.values.size());
  const py::ssize_t r = p.values.front().rows(), c = p.values.front().cols();
  py::array_t<double> times(n), values({n, r, c});
  auto t = times.mutable_unchecked<1>();
  auto v = values.mutable_unchecked<3>();
  for (py::ssize_t k = 0; k < n; ++k) {
    t(k) = p.grid.time(static_cast<int>(k));
    const Mat& m = p.values[static_cast<std::size_t>(k)];
    for (py::ssize_t i = 0; i < r; ++i)
      for (py::ssize_t j = 0; j < c; ++j) v(k, i, j) = m(i, j);
  }
  return py::make_tuple(times, values);
}

}  // namespace

PYBIND11_MODULE(_qlqg, m) {
  m.doc() = "Quantum linear-quadratic-Gaussian filtering and control";

  py::register_exception<Error>(m, "QlqgError", PyExc_RuntimeError);

  py::class_<PhaseSpaceModel>(m, "PhaseSpaceModel")
      .def(py::init<>())
      .def_readwrite("J", &PhaseSpaceModel::J)
      .def_readwrite("R", &PhaseSpaceModel::R)
      .def_readwrite("Lambda", &PhaseSpaceModel::Lambda)
      .def_readwrite("K", &PhaseSpaceModel::K)
      .def_readwrite("hbar", &PhaseSpaceModel::hbar)
      .def_property_readonly("dim", &PhaseSpaceModel::dim);

  py::class_<LinearCoefficients>(m, "LinearCoefficients")
      .def_readonly("A", &LinearCoefficients::A)
      .def_readonly("B", &LinearCoefficients::B)
      .def_readonly("C", &LinearCoefficients::C)
      .def_readonly("N", &LinearCoefficients::N)
      .def_readonly("M", &LinearCoefficients::M);

  py::class_<CostSpec>(m, "CostSpec")
      .def(py::init([](Mat F, Mat G, Mat Omega_T) { return CostSpec{std::move(F), std::move(G), std::move(Omega_T)}; }),
           py::arg("F"), py::arg("G"), py::arg("Omega_T"))
      .def_readwrite("F", &CostSpec::F)
      .def_readwrite("G", &CostSpec::G)
      .def_readwrite("Omega_T", &CostSpec::Omega_T);

  py::class_<TimeGrid>(m, "TimeGrid")
      .def_static("make", &TimeGrid::make, py::arg("t0"), py::arg("t1"), py::arg("n_steps"))
      .def_static("with_step", &TimeGrid::with_step, py::arg("horizon"), py::arg("dt"))
      .def_readonly("t0", &TimeGrid::t0)
      .def_readonly("t1", &TimeGrid::t1)
      .def_readonly("n_steps", &TimeGrid::n_steps)
      .def_property_readonly("dt", &TimeGrid::dt);

  m.def("standard_symplectic", &standard_symplectic, py::arg("m"));
  m.def("free_particle_model", &free_particle_model, py::arg("mass") = 1.0, py::arg("hbar") = 1.0);
  m.def("build_coefficients", &build_coefficients, py::arg("model"));

  m.def(
      "integrate_filter_riccati",
      [](const LinearCoefficients& c, const Mat& sigma0, const TimeGrid& grid) {
        return path_arrays(integrate_filter_riccati(c, sigma0, grid));
      },
      py::arg("coeffs"), py::arg("sigma0"), py::arg("grid"));
  m.def(
      "integrate_control_riccati",
      [](const LinearCoefficients& c, const CostSpec& cost, const TimeGrid& grid) {
        return path_arrays(integrate_control_riccati(c, cost, grid));
      },
      py::arg("coeffs"), py::arg("cost"), py::arg("grid"));
  m.def(
      "lyapunov_unconditional",
      [](const LinearCoefficients& c, const Mat& sigma0, const TimeGrid& grid) {
        return path_arrays(lyapunov_unconditional(c, sigma0, grid));
      },
      py::arg("coeffs"), py::arg("sigma0"), py::arg("grid"));
  m.def(
      "stationary_filter_covariance", [](const LinearCoefficients& c) { return stationary_filter_covariance(c); },
      py::arg("coeffs"));
  m.def(
      "total_minimal_cost",
      [](const LinearCoefficients& c, const CostSpec& cost, const Vec& xbar, const Mat& sigma0, const TimeGrid& grid) {
        return total_minimal_cost(xbar, sigma0, integrate_control_riccati(c, cost, grid),
                                  integrate_filter_riccati(c, sigma0, grid), c, cost);
      },
      py::arg("coeffs"), py::arg("cost"), py::arg("xbar"), py::arg("sigma0"), py::arg("grid"));
  m.def(
      "control_riccati_via_duality",
      [](const LinearCoefficients& c, const CostSpec& cost, const TimeGrid& grid,
         std::optional<Permutation> perm) {
        const ControlProblem p{c.A, c.B, cost.F, cost.G, cost.Omega_T, grid.t1 - grid.t0};
        return path_arrays(control_riccati_via_duality(p, grid, perm));
      },
      py::arg("coeffs"), py::arg("cost"), py::arg("grid"), py::arg("perm") = py::none());

  m.def(
      "simulate_cost",
      [](const LinearCoefficients& c, const CostSpec& cost, const Vec& mean, const Mat& cov, const TimeGrid& grid,
         int n_traj, std::uint64_t seed, double gain_offset) {
        SimConfig cfg;
        cfg.grid = grid;
        cfg.n_traj = n_traj;
        cfg.seed = seed;
        cfg.threads = 0;
        cfg.keep_records = false;
        ClosedLoopPlan plan = ClosedLoopPlan::make(c, cost, GaussianBelief{mean, cov}, grid);
        for (Mat& L : plan.gains.gains) L.array() += gain_offset;
        const CostEstimate est = monte_carlo_expected_cost(simulate_closed_loop(plan, cfg));
        py::dict out;
        out["mean"] = est.mean;
        out["std_error"] = est.std_error;
        out["n"] = est.n;
        out["analytic"] = plan.analytic_cost();
        return out;
      },
      py::arg("coeffs"), py::arg("cost"), py::arg("mean"), py::arg("cov"), py::arg("grid"), py::arg("n_traj"),
      py::arg("seed") = 0, py::arg("gain_offset") = 0.0,
      "Monte-Carlo closed-loop cost under the certainty-equivalent law; gain_offset is added to every gain entry.");

  py::class_<FiniteModel>(m, "FiniteModel")
      .def(py::init<>())
      .def_readwrite("H0", &FiniteModel::H0)
      .def_readwrite("H_controls", &FiniteModel::H_controls)
      .def_readwrite("L_list", &FiniteModel::L_list)
      .def_readwrite("hbar", &FiniteModel::hbar);

  m.def("qubit_dephasing_model", &qubit_dephasing_model, py::arg("rate") = 1.0);
  m.def(
      "master_flow",
      [](const CMat& rho0, const FiniteModel& model, const TimeGrid& grid) {
        return master_flow(DensityMatrix(rho0), model, grid, Vec::Zero(model.controls()));
      },
      py::arg("rho0"), py::arg("model"), py::arg("grid"));
  m.def(
      "sme_ensemble",
      [](const CMat& rho0, const FiniteModel& model, const TimeGrid& grid, int n_traj, std::uint64_t seed,
         const std::string& scheme) {
        SmeConfig cfg;
        cfg.grid = grid;
        cfg.seed = seed;
        if (scheme == "euler") {
          cfg.scheme = SmeScheme::Euler;
        } else if (scheme != "kraus") {
          throw Error(ErrorKind::ConfigError, "scheme must be \"euler\" or \"kraus\"");
        }
        const SmeEnsemble ens = simulate_sme_ensemble(DensityMatrix(rho0), model, zero_policy(model), cfg, n_traj, 0);
        py::dict out;
        out["mean_final"] = ens.mean_final;
        out["min_eigenvalue"] = ens.min_eigenvalue;
        out["max_trace_deviation"] = ens.max_trace_deviation;
        return out;
      },
      py::arg("rho0"), py::arg("model"), py::arg("grid"), py::arg("n_traj"), py::arg("seed") = 0,
      py::arg("scheme") = "kraus");
  m.def("trace_distance", &trace_distance, py::arg("a"), py::arg("b"));
}
