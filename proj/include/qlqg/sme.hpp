#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qlqg/riccati.hpp"
#include "qlqg/types.hpp"

namespace qlqg {

inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kTraceTolerance = 1e-9;
inline constexpr double kPositivityTolerance = 1e-8;
/// Steppers raise PositivityLoss below this eigenvalue.
inline constexpr double kPositivityLossThreshold = -1e-6;

/// Finite-dimensional quantum state. Immutable once constructed.
class DensityMatrix {
 public:
  /// Validates Hermiticity and unit trace (InvalidParameter) and requires the
  /// minimum eigenvalue to be at least -positivity_tolerance (PositivityLoss).
  explicit DensityMatrix(CMat rho, double positivity_tolerance = kPositivityTolerance);

  static DensityMatrix pure(const CVec& psi);
  static DensityMatrix maximally_mixed(Index dim);

  Index dim() const { return rho_.rows(); }
  const CMat& matrix() const { return rho_; }
  double min_eigenvalue() const;
  /// Real part of Tr[rho X].
  double expectation(const CMat& x) const;

 private:
  CMat rho_;
};

/// H(u) = H0 + sum_k u_k H_k with diffusive channels L_1..L_d.
struct FiniteModel {
  CMat H0;
  std::vector<CMat> H_controls;
  std::vector<CMat> L_list;
  double hbar = 1.0;

  Index dim() const { return H0.rows(); }
  Index channels() const { return static_cast<Index>(L_list.size()); }
  Index controls() const { return static_cast<Index>(H_controls.size()); }

  /// Throws DimensionMismatch / InvalidModel.
  void validate() const;
  CMat hamiltonian(const Vec& u) const;
};

/// Minimum eigenvalue of a Hermitian matrix (closed form for 2 x 2).
double hermitian_min_eigenvalue(const CMat& h);

/// Trace norm of a Hermitian matrix.
double trace_norm(const CMat& h);

/// 1/2 || a - b ||_1.
double trace_distance(const CMat& a, const CMat& b);

/// Heisenberg-picture generator
///   L[X] = (i/hbar)[H,X] + 1/2 sum_i (L_i^*[X,L_i] + [L_i^*,X]L_i).
CMat lindblad_heisenberg(const CMat& x, const FiniteModel& model, const Vec& u);

/// Its dual, L*[rho] = -(i/hbar)[H,rho] + sum_i (L_i rho L_i^* - 1/2 {L_i^* L_i, rho}),
/// so that Tr[L*[rho] X] = Tr[rho L[X]].
CMat lindblad_schrodinger(const CMat& rho, const FiniteModel& model, const Vec& u);

/// Fluctuation coefficient rho L^* + L rho - <rho, L + L^*> rho.
CMat fluctuation(const CMat& rho, const CMat& L);

/// One RK4 step of the master equation, Hermitized.
DensityMatrix master_step(const DensityMatrix& rho, const FiniteModel& model, const Vec& u, double dt);

enum class SmeScheme {
  /// Euler-Maruyama step of the filtering equation, Hermitized and divided by its trace.
  Euler,
  /// rho -> M rho M^* / Tr with M = I - K dt + sum L_i dY_i + 1/2 sum L_i L_j (dY_i dY_j - delta_ij dt),
  /// K = (i/hbar) H + 1/2 sum L_i^* L_i. Agrees with Euler to first order and keeps rho >= 0.
  Kraus,
};

/// One step of the filtering equation driven by measurement increments dY.
DensityMatrix sme_step(const DensityMatrix& rho, const FiniteModel& model, const Vec& u, const Vec& dY, double dt,
                       SmeScheme scheme = SmeScheme::Euler);

/// Feedback law u = policy(t, rho).
using ControlPolicy = std::function<Vec(double t, const CMat& rho)>;

/// Policy returning the zero control for `model`.
ControlPolicy zero_policy(const FiniteModel& model);

/// Running cost <rho, X> + u^T u accumulated by the trapezoid rule.
struct SmeCost {
  CMat X;
};

struct SmeConfig {
  TimeGrid grid;
  std::uint64_t seed = 0;
  int record_stride = 1;
  SmeScheme scheme = SmeScheme::Kraus;
  std::optional<SmeCost> cost;

  void validate() const;
};

struct SmeSample {
  double t = 0.0;
  CMat rho;
  Vec dY;  // increment of the step ending at t (zero at t0)
  Vec u;   // control applied from t onwards
};

struct SmeTrajectory {
  std::vector<SmeSample> samples;
  double min_eigenvalue = 0.0;       // over every step
  double max_trace_deviation = 0.0;  // |Tr rho - 1| over every step
  double running_cost = 0.0;         // zero without SmeConfig::cost
};

/// Innovations-driven trajectory, dY_i = <rho, L_i + L_i^*> dt + dW_i.
/// The stream index selects an independent noise stream under config.seed.
SmeTrajectory simulate_sme_trajectory(const DensityMatrix& rho0, const FiniteModel& model,
                                      const ControlPolicy& policy, const SmeConfig& config,
                                      std::uint64_t stream = 0);

struct SmeEnsemble {
  CMat mean_final;               // average of the final states
  std::vector<CMat> finals;      // per trajectory, index order
  double min_eigenvalue = 0.0;
  double max_trace_deviation = 0.0;
};

/// Final states of n_traj independent trajectories (records only the end point).
SmeEnsemble simulate_sme_ensemble(const DensityMatrix& rho0, const FiniteModel& model, const ControlPolicy& policy,
                                  const SmeConfig& config, int n_traj, int threads = 1);

/// Unconditional master flow on the grid, returning every state.
std::vector<CMat> master_flow(const DensityMatrix& rho0, const FiniteModel& model, const TimeGrid& grid,
                              const Vec& u);

/// CSV columns: t, <X_j> for each observable, dY_i, u_k, and optionally
/// re/im parts of every rho entry in row-major order.
std::string sme_trajectory_csv(const SmeTrajectory& traj, const std::vector<CMat>& observables, bool include_rho);

struct ConditioningOutcome {
  double probability = 0.0;
  /// Empty for zero-probability outcomes.
  std::optional<DensityMatrix> posterior;
};

/// Bayes conditioning of rho on the ancilla measurement after the coupling U:
///   rho_w = Tr_anc[U (rho x phi) U^* (I x P_w)] / Tr[U (rho x phi) U^* (I x P_w)].
/// System-ancilla index ordering is s * n_anc + a.
std::vector<ConditioningOutcome> discrete_conditioning(const DensityMatrix& rho, const CMat& U,
                                                       const std::vector<CMat>& projectors, const CVec& phi);

/// exp(-(i/hbar) H dt x I + sqrt(dt) sum_i (L_i x s+_i - L_i^* x s-_i)) on the system
/// and d ancilla qubits (one per channel), s+ = |1><0|.
CMat weak_measurement_unitary(const FiniteModel& model, const Vec& u, double dt);

struct WeakOutcome {
  Vec dY;  // +-sqrt(dt) per channel
  ConditioningOutcome outcome;
};

/// Ancillas prepared in |0>, read out in the |+>, |-> basis; outcome +- on
/// channel i is reported as dY_i = +-sqrt(dt).
std::vector<WeakOutcome> weak_measurement_step(const DensityMatrix& rho, const FiniteModel& model, const Vec& u,
                                               double dt);

/// Pauli matrices and the qubit measured through L = sqrt(rate) sigma_z.
CMat pauli_x();
CMat pauli_y();
CMat pauli_z();
FiniteModel qubit_dephasing_model(double rate = 1.0);

}  // namespace qlqg
