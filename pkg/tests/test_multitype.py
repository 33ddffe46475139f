import numpy as np
import numpy.testing as npt
import pytest

from netkernel.core.errors import ConfigError
from netkernel.core.estimators import (
    MultitypeFactors,
    ThreefoldOptions,
    model_select,
    select_model_order,
    threefold_fit,
)
from netkernel.core.model import InitialDistribution, SystemSpec, sample_weight_matrix
from netkernel.core.presets import agent_types, multitype_kernel
from netkernel.core.simulate import simulate


@pytest.fixture(scope="module")
def multitype_system():
    preset = multitype_kernel(d=2, p=8, types=2)
    types = agent_types(6, 2, seed=0)
    spec = SystemSpec(N=6, d=2, sigma=0.0, dt=1e-2, L=10, init=InitialDistribution.uniform(0.0, 4.0), seed=2)
    a = sample_weight_matrix(6, 5, seed=4)
    cmat = preset.coefficients_for(types)
    train = simulate(spec, a, preset.basis, cmat, 30)
    test = simulate(spec.replace(seed=3), a, preset.basis, cmat, 5)
    return preset.basis, train, test, types


def test_threefold_fit_returns_orthonormal_type_factor(multitype_system):
    basis, train, _, _ = multitype_system
    factors = threefold_fit(train, basis, 2, ThreefoldOptions(max_iter=5, seed=1))
    assert isinstance(factors, MultitypeFactors)
    assert factors.Q == 2
    npt.assert_allclose(factors.v.T @ factors.v, np.eye(2), atol=1e-8)
    assert factors.u.shape == (8, 2)
    assert factors.cmat.shape == (8, 6)
    assert factors.labels.shape == (6,)
    assert set(factors.labels) <= {0, 1}
    assert 1 <= len(factors.history) <= 5
    assert factors.history[0].rel_change_v == float("inf")


def test_threefold_gauge_signs_type_columns(multitype_system):
    basis, train, _, _ = multitype_system
    factors = threefold_fit(train, basis, 2, ThreefoldOptions(max_iter=3, use_kmeans=False))
    for q in range(2):
        pivot = np.argmax(np.abs(factors.v[:, q]))
        assert factors.v[pivot, q] > 0
    norms = np.linalg.norm(factors.u, axis=0)
    assert norms[0] >= norms[1]


def test_single_type_fit_has_one_label(multitype_system):
    basis, train, _, _ = multitype_system
    factors = threefold_fit(train, basis, 1, ThreefoldOptions(max_iter=3, kmeans_mode="labels"))
    npt.assert_array_equal(factors.labels, np.zeros(6, dtype=int))
    summary = factors.summary()
    assert summary["Q"] == 1
    assert len(summary["v"]) == 6


@pytest.mark.parametrize("Q", [0, 7])
def test_threefold_rejects_out_of_range_order(multitype_system, Q):
    basis, train, _, _ = multitype_system
    with pytest.raises(ConfigError):
        threefold_fit(train, basis, Q)


@pytest.mark.parametrize(
    "kwargs", [{"tol": -1.0}, {"max_iter": 0}, {"kmeans_mode": "merge"}], ids=["tol", "max_iter", "mode"]
)
def test_threefold_options_validated(kwargs):
    with pytest.raises(ConfigError):
        ThreefoldOptions(**kwargs)


@pytest.mark.parametrize(
    "errors, expected",
    [
        ({1: 0.5, 2: 0.1, 3: 0.1}, 2),
        ({1: 0.1, 2: 0.1}, 1),
        ({1: float("inf"), 2: 0.3}, 2),
        ({1: float("inf"), 2: float("inf")}, 1),
    ],
    ids=["minimum", "tie", "blow-up", "all-infinite"],
)
def test_select_model_order(errors, expected):
    assert select_model_order(errors) == expected


def test_model_select_reports_every_candidate(multitype_system):
    basis, train, test, _ = multitype_system
    best, rows = model_select(train, test, basis, [2, 1], ThreefoldOptions(max_iter=3))
    assert best in (1, 2)
    assert [row["Q"] for row in rows] == [1, 2]
    for row in rows:
        assert set(row) == {"Q", "traj_err_mean", "traj_err_sd", "converged"}


def test_model_select_needs_candidates(multitype_system):
    basis, train, test, _ = multitype_system
    with pytest.raises(ConfigError):
        model_select(train, test, basis, [])


def test_model_select_checks_horizon(multitype_system):
    basis, train, test, _ = multitype_system
    with pytest.raises(ConfigError):
        model_select(train, test, basis, [1], ThreefoldOptions(max_iter=2), horizon=(0.5, 10))


def test_agent_types_are_balanced():
    types = agent_types(7, 3, seed=5)
    npt.assert_array_equal(np.bincount(types), [3, 2, 2])
