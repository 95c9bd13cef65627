#include <doctest.h>

#include <string>

#include "qlqg/io.hpp"

using namespace qlqg;

namespace {

// Runs `f` and returns the ParseError message, failing the test otherwise.
template <class F>
std::string parse_error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    return e.what();
  }
  FAIL("expected a ParseError");
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

Json free_particle_scenario() {
  return Json::parse(R"({
    "preset": "free_particle",
    "cost": {"F": [[1, 0], [0, 0]], "G": [[0, 0]], "Omega_T": [[1, 0], [0, 1]]},
    "initial": {"mean": [1, 0], "cov": [[0.5, 0], [0, 0.5]]},
    "grid": {"T": 5, "dt": 0.001},
    "sim": {"n_traj": 100, "seed": 7, "record_stride": 10}
  })");
}

}  // namespace

TEST_CASE("matrix parsing") {
  const Mat m = parse_matrix(Json::parse("[[1, 2, 3], [4, 5, 6]]"), "x");
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6.0);
  CHECK(parse_matrix(Json::array(), "x").size() == 0);
  CHECK(contains(parse_error_of([] { parse_matrix(Json::parse("[[1, 2], [3]]"), "x.y"); }), "key 'x.y[1]'"));
  CHECK(contains(parse_error_of([] { parse_matrix(Json::parse("[[1, \"a\"]]"), "w"); }), "key 'w[0][1]'"));
  CHECK(contains(parse_error_of([] { parse_matrix(Json::parse("{}"), "w"); }), "key 'w'"));
  CHECK(matrix_to_json(m) == Json::parse("[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]"));
}

TEST_CASE("vector and complex parsing") {
  const Vec v = parse_vector(Json::parse("[0.5, -1]"), "v");
  CHECK(v.size() == 2);
  CHECK(v(1) == -1.0);
  const CMat z = parse_complex_matrix(Json::parse(R"({"re": [[1, 0]], "im": [[0, 2]]})"), "z");
  CHECK(z(0, 1) == Complex(0.0, 2.0));
  const CMat r = parse_complex_matrix(Json::parse(R"({"re": [[1]]})"), "z");
  CHECK(r(0, 0) == Complex(1.0, 0.0));
  CHECK(contains(parse_error_of([] { parse_complex_matrix(Json::parse(R"({"im": [[1]]})"), "z"); }), "key 'z.re'"));
  CHECK(contains(parse_error_of([] { parse_complex_matrix(Json::parse(R"({"re": [[1]], "im": [[1, 2]]})"), "z"); }),
                 "key 'z.im'"));
}

TEST_CASE("malformed text is a ParseError naming the origin") {
  const std::string msg = parse_error_of([] { parse_json_text("{\"a\": [1, 2", "input.json"); });
  CHECK(contains(msg, "input.json"));
}

TEST_CASE("phase-space model parsing") {
  const Json j = Json::parse(R"({
    "m": 2, "d": 1, "hbar": 1,
    "R": [[0, 0], [0, 1]],
    "Lambda_re": [[1, 0]],
    "K_re": [[-0.5], [0]]
  })");
  const PhaseSpaceModel p = parse_phase_space_model(j);
  const PhaseSpaceModel fp = free_particle_model(1.0, 1.0);
  CHECK(p.J == fp.J);
  CHECK(p.R == fp.R);
  CHECK(p.Lambda == fp.Lambda);
  CHECK(p.K == fp.K);

  Json odd = j;
  odd["m"] = 3;
  CHECK(contains(parse_error_of([&] { parse_phase_space_model(odd); }), "key 'model.m'"));
  Json wrong = j;
  wrong["R"] = Json::parse("[[1]]");
  CHECK(contains(parse_error_of([&] { parse_phase_space_model(wrong); }), "key 'model.R'"));
  Json missing = j;
  missing.erase("hbar");
  CHECK(contains(parse_error_of([&] { parse_phase_space_model(missing); }), "key 'model.hbar'"));
  Json frac = j;
  frac["d"] = 1.5;
  CHECK(contains(parse_error_of([&] { parse_phase_space_model(frac); }), "key 'model.d'"));
}

TEST_CASE("finite model parsing") {
  const Json j = Json::parse(R"({
    "dim": 2,
    "H0": {"re": [[0, 0], [0, 0]]},
    "L_list": [{"re": [[1, 0], [0, -1]]}]
  })");
  const FiniteModel m = parse_finite_model(j);
  CHECK(m.dim() == 2);
  CHECK(m.L_list.size() == 1);
  CHECK(m.L_list[0] == pauli_z());
  Json bad = j;
  bad["L_list"][0] = Json::parse(R"({"re": [[1]]})");
  CHECK(contains(parse_error_of([&] { parse_finite_model(bad); }), "key 'model.L_list[0]'"));
}

TEST_CASE("grid parsing") {
  const TimeGrid a = parse_grid(Json::parse(R"({"T": 1, "dt": 0.001})"), "grid");
  CHECK(a.n_steps == 1000);
  const TimeGrid b = parse_grid(Json::parse(R"({"t0": 1, "T": 2, "n_steps": 10})"), "grid");
  CHECK(b.t0 == 1.0);
  CHECK(b.n_steps == 10);
  CHECK(contains(parse_error_of([] { parse_grid(Json::parse(R"({"T": 1})"), "grid"); }), "key 'grid.dt'"));
  CHECK(contains(parse_error_of([] { parse_grid(Json::parse(R"({"T": 1, "dt": -1})"), "grid"); }), "key 'grid.dt'"));
  CHECK(contains(parse_error_of([] { parse_grid(Json::parse(R"({"T": 0, "dt": 0.1})"), "grid"); }), "key 'grid.T'"));
  CHECK(contains(parse_error_of([] { parse_grid(Json::parse(R"({"T": 1, "dt": 0.1, "n_steps": 10})"), "grid"); }),
                 "key 'grid'"));
}

TEST_CASE("scenario parsing") {
  const Scenario s = parse_scenario(free_particle_scenario());
  CHECK(s.require_model().dim() == 2);
  CHECK(s.require_cost().F(0, 0) == 1.0);
  CHECK(s.require_initial().mean(0) == 1.0);
  CHECK(s.require_grid().n_steps == 5000);
  CHECK(s.sim.n_traj == 100);
  CHECK(s.sim.seed == 7u);
  CHECK(s.direction == RiccatiDirection::Filter);

  SUBCASE("preset object with parameters") {
    Json j = free_particle_scenario();
    j["preset"] = Json::parse(R"({"name": "free_particle", "mass": 2, "hbar": 0.5})");
    const Scenario t = parse_scenario(j);
    CHECK(t.require_model().R(1, 1) == 0.5);
    CHECK(t.require_model().hbar == 0.5);
  }
  SUBCASE("missing sections are reported on use") {
    const Scenario t = parse_scenario(Json::parse(R"({"preset": "free_particle"})"));
    CHECK_THROWS_AS(t.require_cost(), Error);
    CHECK_THROWS_AS(t.require_grid(), Error);
  }
  SUBCASE("errors name the offending key") {
    auto msg_for = [](const char* path, const Json& value) {
      Json j = free_particle_scenario();
      j[Json::json_pointer(path)] = value;
      return parse_error_of([&] { parse_scenario(j); });
    };
    CHECK(contains(msg_for("/sim/n_traj", 0), "key 'sim.n_traj'"));
    CHECK(contains(msg_for("/sim/seed", -1), "key 'sim.seed'"));
    CHECK(contains(msg_for("/sim/record_stride", 3), "key 'sim.record_stride'"));
    CHECK(contains(msg_for("/cost/F", Json::parse("[[1, 0]]")), "key 'cost.F'"));
    CHECK(contains(msg_for("/cost/F", Json::parse("[[-1, 0], [0, 0]]")), "key 'cost'"));
    CHECK(contains(msg_for("/initial/cov", Json::parse("[[1, 0.5], [0, 1]]")), "key 'initial.cov'"));
    CHECK(contains(msg_for("/initial/mean", Json::parse("[1]")), "key 'initial.mean'"));
    CHECK(contains(msg_for("/preset", "harmonic"), "key 'preset.name'"));
    CHECK(contains(msg_for("/direction", "sideways"), "key 'direction'"));
    CHECK(contains(msg_for("/dual_permutation", Json::parse("[0, 0]")), "key 'dual_permutation'"));
    CHECK(contains(msg_for("/dual_permutation", Json::parse("[1, 0, 2]")), "key 'dual_permutation'"));
    CHECK(contains(msg_for("/unexpected", 1), "key 'unexpected'"));
  }
  SUBCASE("preset and model are exclusive") {
    Json j = free_particle_scenario();
    j["model"] = Json::parse(R"({"m": 2, "d": 0, "hbar": 1, "R": [[1, 0], [0, 1]]})");
    CHECK(contains(parse_error_of([&] { parse_scenario(j); }), "key 'preset'"));
  }
  SUBCASE("missing model file") {
    Json j = Json::parse(R"({"model": "does_not_exist.json"})");
    CHECK(contains(parse_error_of([&] { parse_scenario(j); }), "key 'model'"));
  }
}

TEST_CASE("sme section parsing") {
  const Json j = Json::parse(R"({
    "sme": {
      "model": {"dim": 2, "H0": {"re": [[0, 0], [0, 0]]}, "L_list": [{"re": [[1, 0], [0, -1]]}]},
      "psi0": {"re": [[1], [1]]},
      "grid": {"T": 1, "dt": 0.01},
      "scheme": "euler",
      "n_traj": 10,
      "seed": 3,
      "observables": [{"re": [[0, 1], [1, 0]]}]
    }
  })");
  const Scenario s = parse_scenario(j);
  REQUIRE(s.sme.has_value());
  CHECK(s.sme->scheme == SmeScheme::Euler);
  CHECK(s.sme->n_traj == 10);
  CHECK(std::abs(s.sme->rho0(0, 1) - Complex(0.5, 0.0)) <= 1e-15);
  CHECK(s.sme->observables.size() == 1);

  Json bad = j;
  bad["sme"]["scheme"] = "midpoint";
  CHECK(contains(parse_error_of([&] { parse_scenario(bad); }), "key 'sme.scheme'"));
  bad = j;
  bad["sme"]["psi0"] = Json::parse(R"({"re": [[1], [0], [0]]})");
  CHECK(contains(parse_error_of([&] { parse_scenario(bad); }), "key 'sme.psi0'"));
}

TEST_CASE("validate fixtures") {
  const Scenario s = parse_scenario(
      Json::parse(R"({"validate": {"inject": {"gain_perturbation": 0.2, "sme_coarse_dt": 0.5}}})"));
  CHECK(s.inject.gain_perturbation == 0.2);
  CHECK(s.inject.sme_coarse_dt == 0.5);
  CHECK(contains(parse_error_of([] {
                   parse_scenario(Json::parse(R"({"validate": {"inject": {"sme_coarse_dt": 0}}})"));
                 }),
                 "key 'validate.inject.sme_coarse_dt'"));
}
