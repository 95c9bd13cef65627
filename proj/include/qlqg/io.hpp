#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlqg/closed_loop.hpp"
#include "qlqg/sme.hpp"

namespace qlqg {

using Json = nlohmann::json;

/// Parses text as JSON, throwing ParseError with the parser's message.
Json parse_json_text(const std::string& text, const std::string& origin);
Json read_json_file(const std::filesystem::path& file);

/// Real matrix from an array of rows. `key` names the value in diagnostics.
Mat parse_matrix(const Json& j, const std::string& key);
Vec parse_vector(const Json& j, const std::string& key);
/// Complex matrix from {"re": rows, "im": rows}; "im" may be omitted.
CMat parse_complex_matrix(const Json& j, const std::string& key);

Json matrix_to_json(const Mat& m);

/// Phase-space model from
///   {"m", "d", "hbar", "J", "R", "Lambda_re", "Lambda_im", "K_re", "K_im"}.
/// "J" defaults to the standard symplectic form; imaginary parts default to zero.
PhaseSpaceModel parse_phase_space_model(const Json& j, const std::string& key = "model");

/// Finite model from {"dim", "hbar", "H0", "H_controls", "L_list"}.
FiniteModel parse_finite_model(const Json& j, const std::string& key = "model");

Json coefficients_to_json(const LinearCoefficients& c);

enum class RiccatiDirection { Filter, Control };

struct SimSettings {
  int n_traj = 1;
  std::uint64_t seed = 0;
  int record_stride = 1;
  int threads = 0;
  /// Number of trajectory CSV files written by `simulate`.
  int write_trajectories = 0;
};

struct SmeSettings {
  FiniteModel model;
  CMat rho0;
  TimeGrid grid;
  SmeScheme scheme = SmeScheme::Kraus;
  int n_traj = 1;
  std::uint64_t seed = 0;
  int record_stride = 1;
  std::vector<CMat> observables;
  bool include_rho = false;
  std::optional<CMat> cost_observable;
};

/// Test fixtures injected into `validate`.
struct ValidateInject {
  std::optional<double> gain_perturbation;
  std::optional<double> sme_coarse_dt;
};

struct Scenario {
  std::filesystem::path source;
  std::optional<PhaseSpaceModel> model;
  std::optional<CostSpec> cost;
  std::optional<GaussianBelief> initial;
  std::optional<TimeGrid> grid;
  SimSettings sim;
  RiccatiDirection direction = RiccatiDirection::Filter;
  std::optional<Permutation> dual_permutation;
  std::optional<SmeSettings> sme;
  ValidateInject inject;
  std::optional<std::string> out_dir;

  const PhaseSpaceModel& require_model() const;
  const CostSpec& require_cost() const;
  const GaussianBelief& require_initial() const;
  const TimeGrid& require_grid() const;
};

/// Grid from {"t0", "T", "dt"} or {"t0", "T", "n_steps"}.
TimeGrid parse_grid(const Json& j, const std::string& key);

/// Scenario keys: "preset" | "model" (object or path relative to the
/// scenario file), "cost", "initial", "grid", "sim", "direction",
/// "dual_permutation", "sme", "validate", "out".
Scenario parse_scenario(const Json& j, const std::filesystem::path& source = {});
Scenario load_scenario(const std::filesystem::path& file);

}  // namespace qlqg
