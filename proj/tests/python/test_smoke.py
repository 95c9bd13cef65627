import math

import numpy as np
import pytest

import qlqg


def free_particle():
    return qlqg.build_coefficients(qlqg.free_particle_model())


def test_free_particle_coefficients():
    c = free_particle()
    np.testing.assert_array_equal(c.A, [[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_array_equal(c.B, [[0.0], [1.0]])
    np.testing.assert_array_equal(c.C, [[2.0, 0.0]])
    np.testing.assert_array_equal(c.N, [[0.0, 0.0], [0.0, 1.0]])
    np.testing.assert_array_equal(c.M, [[0.0], [0.0]])


def test_stationary_dispersions():
    grid = qlqg.TimeGrid.with_step(20.0, 1e-3)
    times, path = qlqg.integrate_filter_riccati(free_particle(), 2.0 * np.eye(2), grid)
    assert times.shape == (20001,)
    assert path.shape == (20001, 2, 2)
    np.testing.assert_allclose(path[-1], [[0.5, 0.5], [0.5, 1.0]], atol=1e-6)
    s = qlqg.stationary_filter_covariance(free_particle())
    assert math.sqrt(s[0, 0] * s[1, 1]) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-6)


def test_cubic_spreading():
    _, path = qlqg.lyapunov_unconditional(free_particle(), np.eye(2), qlqg.TimeGrid.with_step(5.0, 1e-3))
    assert path[-1, 0, 0] == pytest.approx(1.0 + 25.0 + 125.0 / 3.0, abs=1e-8)


def test_duality_matches_direct_solution():
    cost = qlqg.CostSpec(F=np.diag([1.0, 0.0]), G=np.zeros((1, 2)), Omega_T=np.eye(2))
    grid = qlqg.TimeGrid.with_step(2.0, 1e-3)
    _, direct = qlqg.integrate_control_riccati(free_particle(), cost, grid)
    _, dual = qlqg.control_riccati_via_duality(free_particle(), cost, grid, [1, 0])
    assert np.max(np.abs(direct - dual)) <= 1e-8


def test_simulated_cost_is_reproducible_and_close_to_analytic():
    cost = qlqg.CostSpec(F=np.diag([1.0, 0.0]), G=np.zeros((1, 2)), Omega_T=np.eye(2))
    grid = qlqg.TimeGrid.with_step(1.0, 1e-2)
    args = (free_particle(), cost, np.array([1.0, 0.0]), 0.5 * np.eye(2), grid, 2000)
    a = qlqg.simulate_cost(*args, seed=3)
    b = qlqg.simulate_cost(*args, seed=3)
    assert a == b
    assert a["n"] == 2000
    assert abs(a["mean"] - a["analytic"]) <= 4.0 * a["std_error"]
    analytic = qlqg.total_minimal_cost(free_particle(), cost, np.array([1.0, 0.0]), 0.5 * np.eye(2), grid)
    assert analytic == pytest.approx(a["analytic"], rel=1e-12)


def test_qubit_sme_ensemble():
    model = qlqg.qubit_dephasing_model(1.0)
    rho0 = np.full((2, 2), 0.5, dtype=complex)
    grid = qlqg.TimeGrid.with_step(0.5, 1e-3)
    out = qlqg.sme_ensemble(rho0, model, grid, 200, seed=1)
    assert out["max_trace_deviation"] <= 1e-9
    assert out["min_eigenvalue"] >= -1e-8
    flow = qlqg.master_flow(rho0, model, grid)
    assert abs(flow[-1][0, 1] - 0.5 * math.exp(-1.0)) <= 1e-4
    assert qlqg.trace_distance(out["mean_final"], flow[-1]) <= 0.1


def test_errors_are_translated():
    with pytest.raises(qlqg.QlqgError, match="InvalidParameter"):
        qlqg.master_flow(np.eye(2, dtype=complex), qlqg.qubit_dephasing_model(), qlqg.TimeGrid.with_step(1.0, 0.1))
    with pytest.raises(qlqg.QlqgError):
        qlqg.integrate_filter_riccati(free_particle(), np.eye(3), qlqg.TimeGrid.with_step(1.0, 0.1))
