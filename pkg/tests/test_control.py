import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from adaptive_rcm import control
from adaptive_rcm.control import GainSet

comp = st.floats(-10, 10, allow_nan=False, allow_infinity=False).filter(lambda x: x == 0 or abs(x) > 1e-30)
vec3 = st.tuples(comp, comp, comp).map(np.array)


def shaft_vectors():
    return vec3.filter(lambda d: np.linalg.norm(d) > 1e-3)


def svd_oracle(J, x_dot, w, w_gain):
    """Least-norm solve plus projected step, from an explicit SVD (lambda = 0)."""
    U, s, Vt = np.linalg.svd(J)
    r = int(np.sum(s > 1e-12 * s[0]))
    pinv = Vt[:r].T @ np.diag(1 / s[:r]) @ U[:, :r].T
    Vn = Vt[r:].T
    return pinv @ x_dot + Vn @ (Vn.T @ (-w_gain * w))


def test_projection_axis_aligned():
    np.testing.assert_array_equal(control.projection_matrix([0, 0, 0.4]), np.diag([0.0, 0.0, 1.0]))


def test_projection_diagonal_direction():
    d = np.array([1.0, 1.0, 0.0]) / np.sqrt(2) * 0.4
    expected = np.array([[0.5, 0.5, 0], [0.5, 0.5, 0], [0, 0, 0]])
    np.testing.assert_allclose(control.projection_matrix(d), expected, atol=1e-15)


@given(shaft_vectors())
def test_projector_identities(d):
    P = control.projection_matrix(d)
    assert np.abs(P @ P - P).max() < 1e-12
    assert np.abs((np.eye(3) - P) @ d).max() < 1e-12 * max(1.0, np.linalg.norm(d))
    assert np.abs(P - P.T).max() == 0.0
    assert np.linalg.matrix_rank(P) == 1


def test_projection_rejects_zero_shaft():
    with pytest.raises(control.DegenerateGeometryError):
        control.projection_matrix([0, 0, 1e-12])


def test_admittance_examples():
    d = [0, 0, 0.4]
    np.testing.assert_array_equal(control.admittance_velocity([1, 2, 3], [1, 2, 3], d, 0.1), 0.0)
    np.testing.assert_allclose(control.admittance_velocity([0, 0, 5], [0, 0, 0], d, 0.1), 0.0)
    np.testing.assert_allclose(control.admittance_velocity([2, 0, 1], [0, 0, 0], d, 0.1),
                               [0.2, 0, 0], atol=1e-15)


@given(shaft_vectors(), vec3, st.floats(0.01, 5))
def test_admittance_perpendicular_linear_and_aligned(d, f, k):
    v = control.admittance_velocity(f, np.zeros(3), d, k)
    assert abs(v @ d) <= 1e-10 * max(1.0, np.linalg.norm(f) * np.linalg.norm(d))
    np.testing.assert_array_equal(control.admittance_velocity(f, np.zeros(3), d, 2 * k), 2 * v)
    f_perp = (np.eye(3) - control.projection_matrix(d)) @ f
    assert v @ f_perp >= 0.0


def test_build_command_examples():
    g = GainSet()
    d = np.array([0.0, 0.0, 0.4])
    np.testing.assert_array_equal(control.build_command(np.zeros(3), np.zeros(3), g, d), 0.0)
    np.testing.assert_allclose(control.build_command([0.01, 0, 0], np.zeros(3), g, d),
                               [0.2, 0, 0, 0, 0, 0], rtol=1e-15)
    cmd = control.build_command(np.zeros(3), [0, 0, 3.0], g, d)
    np.testing.assert_array_equal(cmd[3:], 0.0)


def test_gain_matrix_block_structure(rng):
    g = GainSet(k_ins=[1.0, 2.0, 3.0], k_adm=0.5)
    d = rng.normal(size=3)
    G = control.gain_matrix(g, d)
    np.testing.assert_array_equal(G[:3, :3], np.diag([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(G[:3, 3:], 0)
    np.testing.assert_array_equal(G[3:, :3], 0)
    np.testing.assert_allclose(G[3:, 3:], 0.5 * (np.eye(3) - np.outer(d, d) / (d @ d)), atol=1e-15)


def test_null_space_gradient_examples():
    np.testing.assert_array_equal(control.null_space_gradient(0.25, 0.25), np.zeros(8))
    w = control.null_space_gradient(0.35, 0.25)
    np.testing.assert_array_equal(w[:7], 0)
    assert w[7] == pytest.approx(0.10, abs=1e-15)


@pytest.mark.parametrize("eta", [0.05, 0.2, 0.5, 0.9])
def test_null_space_gradient_finite_difference(eta):
    h = 1e-5
    fd = (control.eta_cost(eta + h, 0.25) - control.eta_cost(eta - h, 0.25)) / (2 * h)
    assert abs(fd - control.null_space_gradient(eta, 0.25)[7]) < 1e-8


def test_solve_zero_inputs(rng):
    J = rng.normal(size=(6, 8))
    q_dot, eta_dot = control.solve_redundancy(J, np.zeros(6), np.zeros(8), 0.0)
    np.testing.assert_array_equal(q_dot, 0)
    assert eta_dot == 0


def test_solve_null_step_only(rng):
    J = rng.normal(size=(6, 8))
    q_dot, eta_dot = control.solve_redundancy(J, np.zeros(6), rng.normal(size=8), 0.0)
    assert np.linalg.norm(J @ np.append(q_dot, eta_dot)) < 1e-9


def test_solve_matches_svd_oracle(rng):
    for _ in range(100):
        J = rng.normal(size=(6, 8))
        x_dot, w = rng.normal(size=6), rng.normal(size=8)
        q_dot, eta_dot = control.solve_redundancy(J, x_dot, w, 0.0, 0.7)
        sol = np.append(q_dot, eta_dot)
        np.testing.assert_allclose(sol, svd_oracle(J, x_dot, w, 0.7), atol=1e-9)
        assert np.linalg.norm(J @ sol - x_dot) < 1e-9


def test_null_space_transparency(rng):
    for _ in range(200):
        J = rng.normal(size=(6, 8))
        w = rng.normal(size=8)
        _, null = control.redundancy_terms(J, np.zeros(6), w, 0.0, 1.0)
        assert np.linalg.norm(J @ null) <= 1e-8 * np.linalg.norm(w)


def test_null_step_descends_eta_cost(rng):
    J = rng.normal(size=(6, 8))
    x = np.zeros(8)
    x[7] = 0.6
    costs = []
    for _ in range(200):
        w = control.null_space_gradient(x[7], 0.25)
        q_dot, eta_dot = control.solve_redundancy(J, np.zeros(6), w, 0.0, 1.0)
        x += 0.01 * np.append(q_dot, eta_dot)
        costs.append(control.eta_cost(x[7], 0.25))
    assert np.all(np.diff(costs) < 0)


def test_singular_undamped_raises_and_damped_survives():
    J = np.zeros((6, 8))
    J[:5, :5] = np.eye(5)
    with pytest.raises(control.SingularityError, match="lambda_dls"):
        control.solve_redundancy(J, np.ones(6), np.zeros(8), 0.0)
    q_dot, eta_dot = control.solve_redundancy(J, np.ones(6), np.zeros(8), 1e-4)
    assert np.all(np.isfinite(q_dot))


def test_damped_solution_approaches_exact(rng):
    J = rng.normal(size=(6, 8))
    x_dot = rng.normal(size=6)
    exact = np.append(*control.solve_redundancy(J, x_dot, np.zeros(8), 0.0))
    damped = np.append(*control.solve_redundancy(J, x_dot, np.zeros(8), 1e-4))
    assert np.abs(exact - damped).max() < 1e-6


def test_saturation_preserves_direction():
    sol = np.array([4.0, -1, 0, 0, 0, 0, 1, 0.5])
    out = control.saturate_rates(sol, 2.0)
    assert np.abs(out[:7]).max() == pytest.approx(2.0)
    np.testing.assert_allclose(out * 2, sol)
    np.testing.assert_array_equal(control.saturate_rates(sol / 4, 2.0), sol / 4)


def test_gainset_defaults_and_validation():
    g = GainSet()
    np.testing.assert_array_equal(g.K_ins, np.diag([20.0, 20.0, 20.0]))
    assert (g.k_adm, g.eta0, g.lambda_dls, g.w_gain, g.qdot_limit) == (0.1, 0.25, 1e-4, 1.0, 2.0)
    assert GainSet(k_ins=np.diag([1.0, 2.0, 3.0])).k_ins.tolist() == [1.0, 2.0, 3.0]
    for bad in (dict(k_ins=[1, 0, 1]), dict(k_adm=-1), dict(eta0=1.0), dict(lambda_dls=-1),
                dict(k_ins=[[1, 1, 0], [0, 1, 0], [0, 0, 1]])):
        with pytest.raises(ValueError):
            GainSet(**bad)


def test_compute_command_composes_pieces(rng):
    J = rng.normal(size=(6, 8))
    d = rng.normal(size=3)
    g = GainSet(qdot_limit=1e9)
    x_ins, x_des, f_hat = rng.normal(size=3), rng.normal(size=3), rng.normal(size=3)
    cmd = control.compute_command(J, x_ins, x_des, f_hat, d, 0.4, g)
    x_dot = control.build_command(x_des - x_ins, f_hat, g, d)
    np.testing.assert_allclose(cmd.x_dot_cmd, x_dot, atol=1e-14)
    q_dot, eta_dot = control.solve_redundancy(J, x_dot, control.null_space_gradient(0.4, 0.25),
                                              g.lambda_dls, g.w_gain)
    np.testing.assert_allclose(cmd.q_dot, q_dot, atol=1e-12)
    assert cmd.eta_dot == pytest.approx(eta_dot, abs=1e-12)
