"""Quantum linear-quadratic-Gaussian filtering and control."""

from ._qlqg import (
    CostSpec,
    FiniteModel,
    LinearCoefficients,
    PhaseSpaceModel,
    QlqgError,
    TimeGrid,
    build_coefficients,
    control_riccati_via_duality,
    free_particle_model,
    integrate_control_riccati,
    integrate_filter_riccati,
    lyapunov_unconditional,
    master_flow,
    qubit_dephasing_model,
    simulate_cost,
    sme_ensemble,
    standard_symplectic,
    stationary_filter_covariance,
    total_minimal_cost,
    trace_distance,
)

__all__ = [
    "CostSpec",
    "FiniteModel",
    "LinearCoefficients",
    "PhaseSpaceModel",
    "QlqgError",
    "TimeGrid",
    "build_coefficients",
    "control_riccati_via_duality",
    "free_particle_model",
    "integrate_control_riccati",
    "integrate_filter_riccati",
    "lyapunov_unconditional",
    "master_flow",
    "qubit_dephasing_model",
    "simulate_cost",
    "sme_ensemble",
    "standard_symplectic",
    "stationary_filter_covariance",
    "total_minimal_cost",
    "trace_distance",
]
