import numpy as np
import numpy.testing as npt
import pytest

from netkernel.core.basis import BasisKind, BasisSpec, Polynomial, Trig
from netkernel.core.errors import DimensionMismatchError, NonFiniteStateError
from netkernel.core.model import InitialDistribution, SystemSpec, circle_weight_matrix, drift
from netkernel.core.simulate import add_observation_noise, simulate, trajectory_rng
from netkernel.globals import Config


@pytest.fixture
def kuramoto_setup():
    basis = BasisSpec(1, BasisKind.DIRECT_SCALAR, (Trig("sin", 1),))
    spec = SystemSpec(N=3, d=1, sigma=0.5, dt=0.01, L=20, init=InitialDistribution.uniform(-2.0, 2.0), seed=5)
    return spec, circle_weight_matrix(3), basis, np.array([1.0])


def test_noiseless_simulation_matches_euler_loop(lj_data, lj_spec, lj_graph, lj_basis, lj_coef):
    assert lj_data.states.shape == (50, lj_spec.L + 1, 6, 2)
    for m in (0, 17, 49):
        X = lj_data.states[m, 0]
        for l in range(lj_spec.L):
            X = X + drift(lj_graph, lj_basis, lj_coef, X) * lj_spec.dt
            npt.assert_allclose(lj_data.states[m, l + 1], X, rtol=1e-12, atol=1e-14)


def test_initial_states_follow_distribution(lj_data):
    X0 = lj_data.initial_states
    assert X0.min() >= 0.0 and X0.max() < 1.5


def test_simulation_is_prefix_consistent(kuramoto_setup, monkeypatch):
    monkeypatch.setattr(Config, "CHUNK_TRAJECTORIES", 4)
    spec, a, basis, c = kuramoto_setup
    small = simulate(spec, a, basis, c, 10)
    large = simulate(spec, a, basis, c, 25)
    npt.assert_array_equal(small.states, large.states[:10])


def test_simulation_does_not_depend_on_thread_count(kuramoto_setup, monkeypatch):
    monkeypatch.setattr(Config, "CHUNK_TRAJECTORIES", 4)
    spec, a, basis, c = kuramoto_setup
    serial = simulate(spec, a, basis, c, 18, threads=1)
    threaded = simulate(spec, a, basis, c, 18, threads=3)
    npt.assert_array_equal(serial.states, threaded.states)


def test_noise_increments_have_brownian_scale(kuramoto_setup):
    spec, a, basis, c = kuramoto_setup
    data = simulate(spec, a, basis, c, 200)
    residual = np.diff(data.states, axis=1)
    for l in range(spec.L):
        residual[:, l] -= np.stack([drift(a, basis, c, X) for X in data.states[:, l]]) * spec.dt
    assert residual.std() == pytest.approx(spec.sigma * np.sqrt(spec.dt), rel=0.05)
    assert abs(residual.mean()) < 0.01 * spec.sigma


def test_distinct_seeds_give_distinct_trajectories(kuramoto_setup):
    spec, a, basis, c = kuramoto_setup
    first = simulate(spec, a, basis, c, 3)
    second = simulate(spec.replace(seed=6), a, basis, c, 3)
    assert not np.allclose(first.states, second.states)


def test_explicit_initial_states_keep_noise_streams(kuramoto_setup):
    spec, a, basis, c = kuramoto_setup
    sampled = simulate(spec, a, basis, c, 4)
    replayed = simulate(spec, a, basis, c, 4, initial_states=sampled.initial_states)
    npt.assert_array_equal(replayed.states, sampled.states)


def test_initial_states_shape_checked(kuramoto_setup):
    spec, a, basis, c = kuramoto_setup
    with pytest.raises(DimensionMismatchError):
        simulate(spec, a, basis, c, 4, initial_states=np.zeros((3, 3, 1)))


def test_simulation_metadata(lj_data, lj_basis):
    assert lj_data.sigma_obs == 0.0
    assert lj_data.meta["basis"] == lj_basis.to_dict()
    assert len(lj_data.meta["a_hash"]) == 16
    assert lj_data.T == pytest.approx(5e-3)


def test_blow_up_raises_with_location():
    basis = BasisSpec(1, BasisKind.DIRECT_SCALAR, (Polynomial((0.0, 1.0)),))
    spec = SystemSpec(N=2, d=1, sigma=0.0, dt=0.1, L=10, seed=0)
    with pytest.raises(NonFiniteStateError) as excinfo:
        simulate(spec, circle_weight_matrix(2), basis, np.array([1e6]), 3)
    assert excinfo.value.trajectory in (0, 1, 2)
    assert 1 <= excinfo.value.step <= 10


def test_observation_noise_updates_metadata(lj_data):
    noisy = add_observation_noise(lj_data, 0.01, seed=3)
    assert noisy.sigma_obs == 0.01
    assert lj_data.sigma_obs == 0.0
    deviation = noisy.states - lj_data.states
    assert deviation.std() == pytest.approx(0.01, rel=0.1)
    npt.assert_array_equal(add_observation_noise(lj_data, 0.01, seed=3).states, noisy.states)


def test_zero_observation_noise_is_a_copy(lj_data):
    clean = add_observation_noise(lj_data, 0.0, seed=3)
    npt.assert_array_equal(clean.states, lj_data.states)
    assert clean.meta["sigma_obs"] == 0.0


def test_trajectory_streams_are_independent_of_order():
    first = trajectory_rng(1, 5, 0).standard_normal(3)
    trajectory_rng(1, 4, 0).standard_normal(3)
    npt.assert_array_equal(trajectory_rng(1, 5, 0).standard_normal(3), first)
