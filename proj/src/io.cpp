#include "qlqg/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qlqg {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::ParseError, "key '" + key + "': " + what);
}

const Json& field(const Json& j, const std::string& name, const std::string& key) {
  if (!j.is_object()) bad(key, "expected an object");
  const auto it = j.find(name);
  if (it == j.end()) bad(key + "." + name, "missing");
  return *it;
}

const Json* optional_field(const Json& j, const std::string& name, const std::string& key) {
  if (!j.is_object()) bad(key, "expected an object");
  const auto it = j.find(name);
  return it == j.end() ? nullptr : &*it;
}

double number(const Json& j, const std::string& key) {
  if (!j.is_number()) bad(key, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(key, "expected a finite number");
  return v;
}

long long integer(const Json& j, const std::string& key) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) bad(key, "expected an integer");
  return j.get<long long>();
}

int int_in_range(const Json& j, const std::string& key, long long lo) {
  const long long v = integer(j, key);
  if (v < lo || v > 2'000'000'000LL) bad(key, "integer out of range");
  return static_cast<int>(v);
}

std::uint64_t seed_value(const Json& j, const std::string& key) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const long long v = integer(j, key);
  if (v < 0) bad(key, "seed must be non-negative");
  return static_cast<std::uint64_t>(v);
}

bool boolean(const Json& j, const std::string& key) {
  if (!j.is_boolean()) bad(key, "expected true or false");
  return j.get<bool>();
}

std::string string_value(const Json& j, const std::string& key) {
  if (!j.is_string()) bad(key, "expected a string");
  return j.get<std::string>();
}

Mat sized_matrix(const Json* j, const std::string& key, Index rows, Index cols) {
  if (!j) return Mat::Zero(rows, cols);
  Mat m = parse_matrix(*j, key);
  if (m.size() == 0 && rows * cols == 0) return Mat::Zero(rows, cols);
  if (m.rows() != rows || m.cols() != cols)
    bad(key, "expected a " + std::to_string(rows) + " x " + std::to_string(cols) + " matrix");
  return m;
}

}  // namespace

Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::ParseError, origin + ": " + e.what());
  }
}

Json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::ConfigError, "cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), file.string());
}

Mat parse_matrix(const Json& j, const std::string& key) {
  if (!j.is_array()) bad(key, "expected an array of rows");
  const auto rows = static_cast<Index>(j.size());
  if (rows == 0) return Mat(0, 0);
  if (!j[0].is_array()) bad(key, "expected an array of rows");
  const auto cols = static_cast<Index>(j[0].size());
  Mat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    const std::string rk = key + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) bad(rk, "rows must have equal length");
    for (Index c = 0; c < cols; ++c)
      m(r, c) = number(row[static_cast<std::size_t>(c)], rk + "[" + std::to_string(c) + "]");
  }
  return m;
}

Vec parse_vector(const Json& j, const std::string& key) {
  if (!j.is_array()) bad(key, "expected an array of numbers");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], key + "[" + std::to_string(i) + "]");
  return v;
}

CMat parse_complex_matrix(const Json& j, const std::string& key) {
  const Mat re = parse_matrix(field(j, "re", key), key + ".re");
  Mat im = Mat::Zero(re.rows(), re.cols());
  if (const Json* p = optional_field(j, "im", key)) {
    im = parse_matrix(*p, key + ".im");
    if (im.rows() != re.rows() || im.cols() != re.cols()) bad(key + ".im", "shape differs from re");
  }
  CMat out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

Json matrix_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

PhaseSpaceModel parse_phase_space_model(const Json& j, const std::string& key) {
  const int m = int_in_range(field(j, "m", key), key + ".m", 1);
  const int d = int_in_range(field(j, "d", key), key + ".d", 1);
  PhaseSpaceModel model;
  model.hbar = number(field(j, "hbar", key), key + ".hbar");
  const Json* J = optional_field(j, "J", key);
  if (J) {
    model.J = sized_matrix(J, key + ".J", m, m);
  } else {
    if (m % 2 != 0) bad(key + ".m", "must be even");
    model.J = standard_symplectic(m);
  }
  model.R = sized_matrix(&field(j, "R", key), key + ".R", m, m);
  model.Lambda = CMat(d, m);
  model.Lambda.real() = sized_matrix(optional_field(j, "Lambda_re", key), key + ".Lambda_re", d, m);
  model.Lambda.imag() = sized_matrix(optional_field(j, "Lambda_im", key), key + ".Lambda_im", d, m);
  Index k = 0;
  if (const Json* kk = optional_field(j, "k", key)) {
    k = int_in_range(*kk, key + ".k", 0);
  } else if (const Json* kr = optional_field(j, "K_re", key)) {
    const Mat km = parse_matrix(*kr, key + ".K_re");
    k = km.size() == 0 ? 0 : km.cols();
  }
  model.K = CMat(m, k);
  model.K.real() = sized_matrix(optional_field(j, "K_re", key), key + ".K_re", m, k);
  model.K.imag() = sized_matrix(optional_field(j, "K_im", key), key + ".K_im", m, k);
  return validated(model);
}

FiniteModel parse_finite_model(const Json& j, const std::string& key) {
  const int n = int_in_range(field(j, "dim", key), key + ".dim", 1);
  FiniteModel model;
  if (const Json* h = optional_field(j, "hbar", key)) model.hbar = number(*h, key + ".hbar");
  model.H0 = parse_complex_matrix(field(j, "H0", key), key + ".H0");
  if (model.H0.rows() != n || model.H0.cols() != n) bad(key + ".H0", "expected a dim x dim matrix");
  auto list = [&](const char* name, std::vector<CMat>& out) {
    const Json* arr = optional_field(j, name, key);
    if (!arr) return;
    const std::string lk = key + "." + name;
    if (!arr->is_array()) bad(lk, "expected an array of matrices");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string ik = lk + "[" + std::to_string(i) + "]";
      out.push_back(parse_complex_matrix((*arr)[i], ik));
      if (out.back().rows() != n || out.back().cols() != n) bad(ik, "expected a dim x dim matrix");
    }
  };
  list("H_controls", model.H_controls);
  list("L_list", model.L_list);
  model.validate();
  return model;
}

Json coefficients_to_json(const LinearCoefficients& c) {
  Json out;
  out["A"] = matrix_to_json(c.A);
  out["B"] = matrix_to_json(c.B);
  out["C"] = matrix_to_json(c.C);
  out["N"] = matrix_to_json(c.N);
  out["M"] = matrix_to_json(c.M);
  return out;
}

TimeGrid parse_grid(const Json& j, const std::string& key) {
  const double t0 = optional_field(j, "t0", key) ? number(j.at("t0"), key + ".t0") : 0.0;
  const double T = number(field(j, "T", key), key + ".T");
  if (!(T > t0)) bad(key + ".T", "must exceed t0");
  const Json* n = optional_field(j, "n_steps", key);
  const Json* dt = optional_field(j, "dt", key);
  if (n && dt) bad(key, "give either dt or n_steps, not both");
  if (n) return TimeGrid::make(t0, T, int_in_range(*n, key + ".n_steps", 1));
  if (!dt) bad(key + ".dt", "missing");
  const double h = number(*dt, key + ".dt");
  if (!(h > 0.0)) bad(key + ".dt", "must be positive");
  const double steps = std::round((T - t0) / h);
  if (steps < 1 || steps > 2e9) bad(key + ".dt", "gives an invalid number of steps");
  return TimeGrid::make(t0, T, static_cast<int>(steps));
}

namespace {

PhaseSpaceModel parse_preset(const Json& j) {
  std::string name;
  double mass = 1.0, hbar = 1.0;
  if (j.is_string()) {
    name = j.get<std::string>();
  } else {
    name = string_value(field(j, "name", "preset"), "preset.name");
    if (const Json* p = optional_field(j, "mass", "preset")) mass = number(*p, "preset.mass");
    if (const Json* p = optional_field(j, "hbar", "preset")) hbar = number(*p, "preset.hbar");
  }
  if (name != "free_particle") bad("preset.name", "unknown preset '" + name + "'");
  if (!(mass > 0.0)) bad("preset.mass", "must be positive");
  if (!(hbar > 0.0)) bad("preset.hbar", "must be positive");
  return free_particle_model(mass, hbar);
}

CostSpec parse_cost(const Json& j, Index m, Index k) {
  CostSpec c;
  c.F = sized_matrix(&field(j, "F", "cost"), "cost.F", m, m);
  c.G = sized_matrix(optional_field(j, "G", "cost"), "cost.G", k, m);
  c.Omega_T = sized_matrix(optional_field(j, "Omega_T", "cost"), "cost.Omega_T", m, m);
  try {
    c.validate(m, k);
  } catch (const Error& e) {
    bad("cost", e.what());
  }
  return c;
}

SmeScheme parse_scheme(const Json& j, const std::string& key) {
  const std::string s = string_value(j, key);
  if (s == "euler") return SmeScheme::Euler;
  if (s == "kraus") return SmeScheme::Kraus;
  bad(key, "expected \"euler\" or \"kraus\"");
}

SmeSettings parse_sme(const Json& j, const std::filesystem::path& base) {
  SmeSettings s;
  const Json& mj = field(j, "model", "sme");
  if (mj.is_string()) {
    s.model = parse_finite_model(read_json_file(base / mj.get<std::string>()), "sme.model");
  } else {
    s.model = parse_finite_model(mj, "sme.model");
  }
  const Index n = s.model.dim();
  if (const Json* r = optional_field(j, "rho0", "sme")) {
    s.rho0 = parse_complex_matrix(*r, "sme.rho0");
  } else if (const Json* p = optional_field(j, "psi0", "sme")) {
    const CMat psi = parse_complex_matrix(*p, "sme.psi0");
    if (psi.cols() != 1 || psi.rows() != n) bad("sme.psi0", "expected a dim x 1 column");
    if (psi.norm() == 0.0) bad("sme.psi0", "must be non-zero");
    const CMat v = psi / psi.norm();
    s.rho0 = v * v.adjoint();
  } else {
    s.rho0 = CMat::Identity(n, n) / static_cast<double>(n);
  }
  if (s.rho0.rows() != n || s.rho0.cols() != n) bad("sme.rho0", "expected a dim x dim matrix");
  s.grid = parse_grid(field(j, "grid", "sme"), "sme.grid");
  if (const Json* p = optional_field(j, "scheme", "sme")) s.scheme = parse_scheme(*p, "sme.scheme");
  if (const Json* p = optional_field(j, "n_traj", "sme")) s.n_traj = int_in_range(*p, "sme.n_traj", 1);
  if (const Json* p = optional_field(j, "seed", "sme")) s.seed = seed_value(*p, "sme.seed");
  if (const Json* p = optional_field(j, "record_stride", "sme")) s.record_stride = int_in_range(*p, "sme.record_stride", 1);
  if (const Json* p = optional_field(j, "include_rho", "sme")) s.include_rho = boolean(*p, "sme.include_rho");
  if (const Json* p = optional_field(j, "observables", "sme")) {
    if (!p->is_array()) bad("sme.observables", "expected an array of matrices");
    for (std::size_t i = 0; i < p->size(); ++i) {
      const std::string ik = "sme.observables[" + std::to_string(i) + "]";
      s.observables.push_back(parse_complex_matrix((*p)[i], ik));
      if (s.observables.back().rows() != n || s.observables.back().cols() != n) bad(ik, "expected a dim x dim matrix");
    }
  }
  if (const Json* p = optional_field(j, "cost_observable", "sme")) {
    s.cost_observable = parse_complex_matrix(*p, "sme.cost_observable");
    if (s.cost_observable->rows() != n || s.cost_observable->cols() != n)
      bad("sme.cost_observable", "expected a dim x dim matrix");
  }
  if (s.grid.n_steps % s.record_stride != 0) bad("sme.record_stride", "must divide the number of steps");
  return s;
}

}  // namespace

const PhaseSpaceModel& Scenario::require_model() const {
  require(model.has_value(), ErrorKind::ConfigError, "scenario defines no model or preset");
  return *model;
}

const CostSpec& Scenario::require_cost() const {
  require(cost.has_value(), ErrorKind::ConfigError, "scenario defines no cost");
  return *cost;
}

const GaussianBelief& Scenario::require_initial() const {
  require(initial.has_value(), ErrorKind::ConfigError, "scenario defines no initial state");
  return *initial;
}

const TimeGrid& Scenario::require_grid() const {
  require(grid.has_value(), ErrorKind::ConfigError, "scenario defines no grid");
  return *grid;
}

Scenario parse_scenario(const Json& j, const std::filesystem::path& source) {
  if (!j.is_object()) bad("<root>", "scenario must be a JSON object");
  static const std::vector<std::string> known = {"preset", "model", "cost", "initial", "grid", "sim", "direction",
                                                 "dual_permutation", "sme", "validate", "out", "description"};
  for (const auto& item : j.items())
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) bad(item.key(), "unknown key");

  Scenario s;
  s.source = source;
  const std::filesystem::path base = source.empty() ? std::filesystem::path(".") : source.parent_path();
  const Json* preset = optional_field(j, "preset", "<root>");
  const Json* model = optional_field(j, "model", "<root>");
  if (preset && model) bad("preset", "give either preset or model, not both");
  if (preset) s.model = parse_preset(*preset);
  if (model) {
    if (model->is_string()) {
      const auto file = base / model->get<std::string>();
      if (!std::filesystem::exists(file)) bad("model", "file " + file.string() + " does not exist");
      s.model = parse_phase_space_model(read_json_file(file), "model");
    } else {
      s.model = parse_phase_space_model(*model, "model");
    }
  }
  if (const Json* c = optional_field(j, "cost", "<root>")) {
    if (!s.model) bad("cost", "requires a model or preset");
    s.cost = parse_cost(*c, s.model->dim(), s.model->controls());
  }
  if (const Json* init = optional_field(j, "initial", "<root>")) {
    if (!s.model) bad("initial", "requires a model or preset");
    const Index m = s.model->dim();
    GaussianBelief b;
    b.mean = optional_field(*init, "mean", "initial") ? parse_vector(init->at("mean"), "initial.mean") : Vec::Zero(m);
    if (b.mean.size() != m) bad("initial.mean", "expected " + std::to_string(m) + " entries");
    b.cov = sized_matrix(&field(*init, "cov", "initial"), "initial.cov", m, m);
    if (max_abs(b.cov - b.cov.transpose()) > 1e-12) bad("initial.cov", "must be symmetric");
    s.initial = b;
  }
  if (const Json* g = optional_field(j, "grid", "<root>")) s.grid = parse_grid(*g, "grid");
  if (const Json* sim = optional_field(j, "sim", "<root>")) {
    if (!sim->is_object()) bad("sim", "expected an object");
    if (const Json* p = optional_field(*sim, "n_traj", "sim")) s.sim.n_traj = int_in_range(*p, "sim.n_traj", 1);
    if (const Json* p = optional_field(*sim, "seed", "sim")) s.sim.seed = seed_value(*p, "sim.seed");
    if (const Json* p = optional_field(*sim, "record_stride", "sim"))
      s.sim.record_stride = int_in_range(*p, "sim.record_stride", 1);
    if (const Json* p = optional_field(*sim, "threads", "sim")) s.sim.threads = int_in_range(*p, "sim.threads", 0);
    if (const Json* p = optional_field(*sim, "write_trajectories", "sim"))
      s.sim.write_trajectories = int_in_range(*p, "sim.write_trajectories", 0);
    if (s.grid && s.grid->n_steps % s.sim.record_stride != 0)
      bad("sim.record_stride", "must divide the number of grid steps");
  }
  if (const Json* d = optional_field(j, "direction", "<root>")) {
    const std::string dir = string_value(*d, "direction");
    if (dir == "filter") {
      s.direction = RiccatiDirection::Filter;
    } else if (dir == "control") {
      s.direction = RiccatiDirection::Control;
    } else {
      bad("direction", "expected \"filter\" or \"control\"");
    }
  }
  if (const Json* p = optional_field(j, "dual_permutation", "<root>")) {
    if (!p->is_array()) bad("dual_permutation", "expected an array of indices");
    Permutation perm;
    for (std::size_t i = 0; i < p->size(); ++i)
      perm.push_back(int_in_range((*p)[i], "dual_permutation[" + std::to_string(i) + "]", 0));
    if (s.model && static_cast<Index>(perm.size()) != s.model->dim())
      bad("dual_permutation", "length must equal the phase-space dimension");
    try {
      permutation_matrix(perm);
    } catch (const Error& e) {
      bad("dual_permutation", e.what());
    }
    s.dual_permutation = perm;
  }
  if (const Json* p = optional_field(j, "sme", "<root>")) s.sme = parse_sme(*p, base);
  if (const Json* v = optional_field(j, "validate", "<root>")) {
    if (const Json* inj = optional_field(*v, "inject", "validate")) {
      if (const Json* p = optional_field(*inj, "gain_perturbation", "validate.inject"))
        s.inject.gain_perturbation = number(*p, "validate.inject.gain_perturbation");
      if (const Json* p = optional_field(*inj, "sme_coarse_dt", "validate.inject")) {
        const double dt = number(*p, "validate.inject.sme_coarse_dt");
        if (!(dt > 0.0)) bad("validate.inject.sme_coarse_dt", "must be positive");
        s.inject.sme_coarse_dt = dt;
      }
    }
  }
  if (const Json* o = optional_field(j, "out", "<root>")) s.out_dir = string_value(*o, "out");
  return s;
}

Scenario load_scenario(const std::filesystem::path& file) {
  require(std::filesystem::exists(file), ErrorKind::ConfigError, "scenario file " + file.string() + " does not exist");
  return parse_scenario(read_json_file(file), file);
}

}  // namespace qlqg
