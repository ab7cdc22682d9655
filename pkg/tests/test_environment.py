import numpy as np
import pytest
from hypothesis import given, strategies as st

from adaptive_rcm import environment as env
from adaptive_rcm.estimation import SENSOR, WORLD
from adaptive_rcm.manipulator import rotvec_matrix

comp = st.floats(-5, 5, allow_nan=False)
vec3 = st.tuples(comp, comp, comp).map(np.array)
nonneg3 = st.tuples(*[st.floats(0, 1000)] * 3).map(np.array)


def test_static_trocar():
    traj = env.TrocarTrajectory.static([0.4, 0.0, 0.3])
    for t in (0.0, 1.0, 100.0):
        x, v = env.trocar_state(traj, t)
        np.testing.assert_array_equal(x, [0.4, 0.0, 0.3])
        np.testing.assert_array_equal(v, 0.0)


def test_breathing_excursion_is_two_centimeters_peak_to_peak():
    traj = env.TrocarTrajectory.breathing([0, 0, 0.3], [1, 0, 0], 0.02, 0.25)
    xs = np.array([env.trocar_state(traj, t)[0] for t in np.linspace(0, 8, 8001)])
    assert xs[:, 0].max() == pytest.approx(0.01, abs=1e-12)
    assert xs[:, 0].min() == pytest.approx(-0.01, abs=1e-12)
    np.testing.assert_array_equal(xs[:, 1:], np.tile([0, 0.3], (len(xs), 1)))


@pytest.mark.parametrize("t", [0.3, 1.7, 3.99, 12.5])
def test_oscillation_velocity_matches_finite_difference(t):
    traj = env.TrocarTrajectory(kind="linear_oscillation", center=[0.1, 0.2, 0.3],
                                direction=[1, 2, 0], amplitude=0.01, period=4.0, phase=0.4)
    h = 1e-6
    fd = (env.trocar_state(traj, t + h)[0] - env.trocar_state(traj, t - h)[0]) / (2 * h)
    assert np.abs(fd - env.trocar_state(traj, t)[1]).max() < 1e-8


def test_custom_samples_interpolate_and_hold():
    traj = env.TrocarTrajectory(kind="custom_samples", sample_times=(1.0, 2.0, 4.0),
                                sample_positions=[[0, 0, 0], [0.01, 0, 0], [0.01, 0.02, 0]])
    x, v = env.trocar_state(traj, 1.5)
    np.testing.assert_allclose(x, [0.005, 0, 0])
    np.testing.assert_allclose(v, [0.01, 0, 0])
    x, v = env.trocar_state(traj, 3.0)
    np.testing.assert_allclose(x, [0.01, 0.01, 0])
    np.testing.assert_allclose(v, [0, 0.01, 0])
    x, v = env.trocar_state(traj, 9.0)
    np.testing.assert_allclose(x, [0.01, 0.02, 0])
    np.testing.assert_array_equal(v, 0)
    with pytest.raises(ValueError, match="precedes"):
        env.trocar_state(traj, 0.5)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        env.TrocarTrajectory(kind="spiral")
    with pytest.raises(ValueError):
        env.TrocarTrajectory(kind="linear_oscillation", amplitude=-1)
    with pytest.raises(ValueError):
        env.TrocarTrajectory(kind="custom_samples", sample_times=(1.0, 1.0),
                             sample_positions=np.zeros((2, 3)))


def test_interaction_force_examples():
    e = env.EnvironmentModel(k_env=[100, 100, 100], b_env=[0, 0, 0])
    np.testing.assert_array_equal(env.rcm_interaction_force(e, [1, 2, 3], [1, 2, 3], [0.1, 0, 0], [0.1, 0, 0]), 0)
    np.testing.assert_allclose(env.rcm_interaction_force(e, [0.01, 0, 0], [0, 0, 0], [0, 0, 0], [0, 0, 0]),
                               [1.0, 0, 0])


def test_interaction_force_matches_matrix_form(rng):
    for _ in range(200):
        K, B = rng.uniform(0, 1000, 3), rng.uniform(0, 50, 3)
        xt, xr, vt, vr = rng.normal(size=(4, 3))
        expected = np.diag(K) @ (xt - xr) + np.diag(B) @ (vt - vr)
        got = env.rcm_interaction_force(env.EnvironmentModel(K, B), xt, xr, vt, vr)
        np.testing.assert_allclose(got, expected, atol=1e-12, rtol=0)


@given(nonneg3, vec3, vec3)
def test_spring_force_is_passive(K, xt, xr):
    f = env.rcm_interaction_force(env.EnvironmentModel(K, np.zeros(3)), xt, xr, np.zeros(3), np.zeros(3))
    assert f @ (xt - xr) >= 0.0


def test_environment_defaults_and_validation():
    e = env.EnvironmentModel()
    np.testing.assert_array_equal(e.k_env, [500, 500, 500])
    np.testing.assert_array_equal(e.b_env, [2, 2, 2])
    np.testing.assert_array_equal(env.EnvironmentModel(np.diag([1.0, 2, 3]), 0.0).k_env, [1, 2, 3])
    with pytest.raises(ValueError):
        env.EnvironmentModel(k_env=[-1, 0, 0])


def test_wrench_examples():
    w = env.synthesize_base_wrench(np.zeros(3), np.zeros(3), [0, 0, 0.4], 0.25)
    np.testing.assert_array_equal(w.vector, 0)
    w = env.synthesize_base_wrench([1, 0, 0], np.zeros(3), [0, 0, 0.4], 0.25)
    np.testing.assert_allclose(w.force, [-1, 0, 0])
    np.testing.assert_allclose(w.moment, [0, -0.1, 0], atol=1e-16)
    assert w.frame == WORLD


def test_equal_and_opposite_shaft_pair_is_invisible():
    d = np.array([0.0, 0.0, 0.4])
    alpha = 3.0
    w = env.synthesize_base_wrench(-alpha * d, alpha * d, d, 0.25)
    np.testing.assert_array_equal(w.vector, 0.0)


@given(vec3, vec3, vec3, vec3, st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 0.95))
def test_wrench_linearity(f1, g1, f2, g2, a, b, eta):
    d = np.array([0.1, -0.2, 0.3])
    lhs = env.synthesize_base_wrench(a * f1 + b * f2, a * g1 + b * g2, d, eta).vector
    rhs = a * env.synthesize_base_wrench(f1, g1, d, eta).vector \
        + b * env.synthesize_base_wrench(f2, g2, d, eta).vector
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_wrench_matches_explicit_lever_arms(rng):
    for _ in range(50):
        d, fr, fi = rng.normal(size=(3, 3))
        eta = rng.uniform(0.05, 0.95)
        w = env.synthesize_base_wrench(fr, fi, d, eta)
        np.testing.assert_allclose(w.force + fr + fi, 0, atol=1e-14)
        np.testing.assert_allclose(w.moment + np.cross(eta * d, fr) + np.cross(d, fi), 0, atol=1e-14)


def test_sensor_frame_round_trip(rng):
    R = rotvec_matrix(rng.normal(size=3))
    d, fr, fi = rng.normal(size=(3, 3))
    world = env.synthesize_base_wrench(fr, fi, d, 0.3)
    sensor = env.synthesize_base_wrench(fr, fi, d, 0.3, R_world_sensor=R)
    assert sensor.frame == SENSOR
    np.testing.assert_allclose(sensor.to_world(R).vector, world.vector, atol=1e-14)


def test_noise_is_seeded_and_zero_mean():
    noise = env.NoiseModel(force_std=0.1, moment_std=0.01)
    draw = lambda seed: np.array([env.synthesize_base_wrench(np.zeros(3), np.zeros(3), [0, 0, 0.4], 0.25,
                                                             noise, rng).vector
                                  for rng in [np.random.default_rng(seed)] for _ in range(2000)])
    a, b = draw(7), draw(7)
    np.testing.assert_array_equal(a, b)
    assert np.abs(a.mean(axis=0)).max() < 0.01
    assert a[:, :3].std() == pytest.approx(0.1, rel=0.05)
    with pytest.raises(ValueError):
        env.synthesize_base_wrench(np.zeros(3), np.zeros(3), [0, 0, 1], 0.5, noise, None)


def test_external_load_schedule():
    load = env.ExternalLoad((env.LoadInterval(1.0, 2.0, [0, 1, 0]), env.LoadInterval(1.5, 3.0, [1, 0, 0])))
    np.testing.assert_array_equal(load.force_at(0.5), 0)
    np.testing.assert_array_equal(load.force_at(1.7), [1, 1, 0])
    np.testing.assert_array_equal(load.force_at(2.0), [1, 0, 0])
    np.testing.assert_array_equal(load.force_at(3.0), 0)
    assert not env.ExternalLoad(load.intervals, enabled=False).active(1.7)
