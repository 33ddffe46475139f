import hypothesis.extra.numpy as hyp_np
import hypothesis.strategies as st
import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings

from netkernel.core.errors import (
    ConfigError,
    DegreeOutOfRangeError,
    DimensionMismatchError,
    NonFiniteInputError,
)
from netkernel.core.model import (
    InitialDistribution,
    InteractionKernel,
    SystemSpec,
    WeightMatrix,
    circle_weight_matrix,
    drift,
    eval_kernel,
    leader_follower_weight_matrix,
    pairwise_diffs,
    sample_weight_matrix,
)
from netkernel.core.presets import lennard_jones_kernel, multitype_kernel


def drift_loop(a, kernel_for, X):
    N = X.shape[0]
    out = np.zeros_like(X)
    for i in range(N):
        for j in range(N):
            if j != i:
                out[i] += a.entries[i, j] * kernel_for(i)(X[j] - X[i])
    return out


@pytest.mark.parametrize(
    "entries, error",
    [
        (np.ones((2, 3)), DimensionMismatchError),
        (np.array([[0.0, np.nan], [1.0, 0.0]]), NonFiniteInputError),
        (np.array([[1.0, 0.0], [1.0, 0.0]]), ConfigError),
        (np.array([[0.0, 0.5], [1.0, 0.0]]), ConfigError),
        (np.array([[0.0, -1.0], [1.0, 0.0]]), ConfigError),
    ],
    ids=["not-square", "nan", "diagonal", "row-norm", "negative"],
)
def test_weight_matrix_validation(entries, error):
    with pytest.raises(error):
        WeightMatrix(entries)


def test_weight_matrix_flags_zero_rows():
    a = WeightMatrix(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.6, 0.8, 0.0]]))
    assert a.degenerate == (False, True, False)
    assert a.any_degenerate
    npt.assert_array_equal(a.off_diagonal_row(2), [0.6, 0.8])


def test_weight_matrix_entries_are_read_only():
    a = circle_weight_matrix(3)
    with pytest.raises(ValueError):
        a.entries[0, 1] = 0.5


raw_weights = st.one_of(st.just(0.0), st.floats(-1.0, 0.0), st.floats(1e-3, 10.0))


@settings(max_examples=50, deadline=None)
@given(raw=hyp_np.arrays(np.float64, (5, 5), elements=raw_weights))
def test_from_raw_always_yields_admissible_matrix(raw):
    a = WeightMatrix.from_raw(raw)
    assert np.all(np.diag(a.entries) == 0)
    assert np.all((a.entries >= 0) & (a.entries <= 1))
    norms = np.linalg.norm(a.entries, axis=1)
    for norm, degenerate in zip(norms, a.degenerate):
        assert norm == 0 if degenerate else norm == pytest.approx(1.0, abs=1e-10)


def test_from_rows_inserts_zero_diagonal():
    a = WeightMatrix.from_rows([np.array([3.0, 4.0]), np.array([1.0, 0.0]), np.array([0.0, 2.0])])
    npt.assert_allclose(a.entries, [[0.0, 0.6, 0.8], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def test_weight_matrix_dict_round_trip():
    a = sample_weight_matrix(5, 2, seed=0)
    npt.assert_array_equal(WeightMatrix.from_dict(a.to_dict()).entries, a.entries)


@pytest.mark.parametrize("degree", [1, 2, 4])
def test_sample_weight_matrix_has_requested_degree(degree):
    a = sample_weight_matrix(5, degree, seed=degree)
    npt.assert_array_equal((a.entries > 0).sum(axis=1), degree)
    npt.assert_allclose(np.linalg.norm(a.entries, axis=1), 1.0)


def test_sample_weight_matrix_is_seeded():
    npt.assert_array_equal(sample_weight_matrix(6, 3, seed=1).entries, sample_weight_matrix(6, 3, seed=1).entries)


@pytest.mark.parametrize("degree", [0, 5])
def test_sample_weight_matrix_degree_out_of_range(degree):
    with pytest.raises(DegreeOutOfRangeError):
        sample_weight_matrix(5, degree, seed=0)


def test_circle_weight_matrix():
    a = circle_weight_matrix(4)
    npt.assert_array_equal(np.argmax(a.entries, axis=1), [1, 2, 3, 0])
    assert not a.any_degenerate


def test_leader_follower_graph_structure():
    graph = leader_follower_weight_matrix(12, 2, seed=0)
    assert len(graph.leaders) == 2
    assert sorted(j for g in graph.groups for j in g) == list(range(12))
    for leader, members in zip(graph.leaders, graph.groups):
        followers = [j for j in members if j != leader]
        assert np.all(graph.a.entries[leader, followers] > 0)
        for j in followers:
            assert graph.a.entries[j, leader] == pytest.approx(graph.a.entries[j].max())


def test_leader_follower_needs_enough_agents():
    with pytest.raises(DegreeOutOfRangeError):
        leader_follower_weight_matrix(3, 2, seed=0)


def test_pairwise_diffs_orientation():
    X = np.array([[0.0], [1.0], [3.0]])
    r = pairwise_diffs(X)
    assert r[0, 2, 0] == 3.0
    assert r[2, 0, 0] == -3.0


def test_eval_kernel_matches_lennard_jones_profile():
    preset = lennard_jones_kernel(d=2)
    x = np.array([[1.0, 0.0], [0.0, 0.3]])
    values = eval_kernel(preset.basis, preset.coef, x)
    npt.assert_allclose(values[0], [1.0, 0.0], atol=1e-12)
    npt.assert_allclose(values[1], [0.0, -160.0])


def test_eval_kernel_rejects_wrong_coefficient_length():
    preset = lennard_jones_kernel(d=2)
    with pytest.raises(DimensionMismatchError):
        eval_kernel(preset.basis, np.ones(4), np.zeros((1, 2)))


def test_drift_matches_double_loop(rng, lj_basis, lj_coef):
    a = sample_weight_matrix(5, 3, seed=2)
    X = rng.uniform(0.0, 2.0, size=(5, 2))
    kernel = InteractionKernel(lj_basis, lj_coef)
    npt.assert_allclose(drift(a, lj_basis, lj_coef, X), drift_loop(a, lambda i: kernel, X), rtol=1e-10, atol=1e-12)


def test_drift_with_per_agent_coefficients(rng):
    preset = multitype_kernel(d=2, p=8, types=2)
    types = np.array([0, 1, 1, 0])
    C = preset.coefficients_for(types)
    a = sample_weight_matrix(4, 3, seed=5)
    X = rng.uniform(0.0, 3.0, size=(4, 2))
    kernels = [InteractionKernel(preset.basis, C[:, i]) for i in range(4)]
    npt.assert_allclose(drift(a, preset.basis, C, X), drift_loop(a, lambda i: kernels[i], X), rtol=1e-10, atol=1e-12)


def test_drift_rejects_mismatched_state(lj_basis, lj_coef):
    with pytest.raises(DimensionMismatchError):
        drift(circle_weight_matrix(3), lj_basis, lj_coef, np.zeros((4, 2)))


@pytest.mark.parametrize(
    "changes",
    [{"N": 1}, {"L": 0}, {"d": 0}, {"sigma": -0.1}, {"dt": 0.0}],
    ids=["N", "L", "d", "sigma", "dt"],
)
def test_system_spec_validation(changes):
    base = SystemSpec(N=3, d=1, sigma=0.0, dt=0.01, L=10)
    with pytest.raises(ConfigError):
        base.replace(**changes)


def test_system_spec_round_trip_and_horizon():
    spec = SystemSpec(N=4, d=2, sigma=0.1, dt=0.01, L=30, init=InitialDistribution.gaussian(0.0, 2.0), seed=9)
    assert spec.T == pytest.approx(0.3)
    assert SystemSpec.from_dict(spec.to_dict()) == spec


def test_initial_distribution_rejects_empty_box():
    with pytest.raises(ConfigError):
        InitialDistribution.uniform(1.0, 1.0)
