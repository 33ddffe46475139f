import numpy as np
import numpy.testing as npt
import pytest

from netkernel.core.diagnostics import exploration_measure
from netkernel.core.errors import AllZeroError, DimensionMismatchError
from netkernel.core.estimators import (
    OralsEstimator,
    deterministic_als,
    get_estimator,
    normality_harness,
    operator_regression,
    orals_fit,
)
from netkernel.core.estimators.orals import factorize
from netkernel.core.linsolve import Regularizer
from netkernel.core.metrics import graph_error, kernel_error
from netkernel.core.model import InitialDistribution, SystemSpec, sample_weight_matrix
from netkernel.core.presets import rip_fourier_basis


def test_operator_regression_recovers_outer_products(lj_data, lj_basis, lj_graph, lj_coef):
    estimates = operator_regression(lj_data, lj_basis)
    assert estimates.N == 6
    for i, z in enumerate(estimates.Z):
        assert z.shape == (5, 3)
        npt.assert_allclose(z, np.outer(lj_graph.off_diagonal_row(i), lj_coef), rtol=1e-6, atol=1e-6)
    assert estimates.residuals.max() < 1e-6
    assert np.all(estimates.min_sv_sq_per_M > 0)


def test_factorize_exact_rank_one(rng):
    a_rows = [np.abs(rng.standard_normal(3)) for _ in range(4)]
    a_rows = [row / np.linalg.norm(row) for row in a_rows]
    c = np.array([0.5, -2.0, 1.0])
    a, c_hat = deterministic_als([np.outer(row, c) for row in a_rows])
    for i, row in enumerate(a_rows):
        npt.assert_allclose(a.off_diagonal_row(i), row, atol=1e-12)
    npt.assert_allclose(c_hat, c, atol=1e-12)


def test_factorize_records_two_iterations(rng):
    Z = [np.outer(np.abs(rng.standard_normal(2)), [1.0, 2.0]) for _ in range(3)]
    _, _, trace = factorize(Z)
    assert len(trace) == 2
    assert trace[0][0] == float("inf")
    assert trace[1][0] == pytest.approx(0.0, abs=1e-12)


def test_factorize_rejects_all_zero_estimates():
    with pytest.raises(AllZeroError):
        deterministic_als([np.zeros((2, 3)) for _ in range(3)])


def test_orals_recovers_noiseless_system(lj_data, lj_basis, lj_graph, lj_coef):
    result = orals_fit(lj_data, lj_basis)
    assert result.algorithm == "orals"
    assert result.converged
    assert len(result.history) == 2
    assert graph_error(lj_graph, result.a_hat) < 1e-6
    assert kernel_error(lj_basis, lj_coef, result.c_hat, exploration_measure(lj_data)) < 1e-6
    assert len(result.summary()["min_sv_sq_per_M"]) == 6


def test_orals_estimator_accepts_tikhonov(lj_data, lj_basis, lj_graph):
    estimator = get_estimator("orals")(reg=Regularizer.tikhonov(1e-10))
    assert isinstance(estimator, OralsEstimator)
    result = estimator.fit(lj_data, lj_basis)
    assert graph_error(lj_graph, result.a_hat) < 1e-3


@pytest.fixture
def fourier_system():
    spec = SystemSpec(N=3, d=1, sigma=0.1, dt=0.01, L=1, init=InitialDistribution.gaussian(), seed=0)
    return spec, sample_weight_matrix(3, 2, seed=1), np.array([1.0, 0.5]), rip_fourier_basis()


def test_normality_harness_without_noise_is_exact(fourier_system):
    spec, a, c, basis = fourier_system
    report = normality_harness(spec.replace(sigma=0.0), a, c, basis, M=50, reps=3, seed=0)
    npt.assert_array_equal(report.discrepancy, np.zeros(3))
    assert report.max_abs_deviation < 1e-6


def test_normality_harness_needs_replications(fourier_system):
    spec, a, c, basis = fourier_system
    with pytest.raises(DimensionMismatchError):
        normality_harness(spec, a, c, basis, M=50, reps=1, seed=0)


@pytest.mark.slow
def test_normality_harness_matches_asymptotic_covariance(fourier_system):
    spec, a, c, basis = fourier_system
    report = normality_harness(spec, a, c, basis, M=1000, reps=200, seed=4, big_factor=20)
    summary = report.to_dict()
    assert summary["max_discrepancy"] < 0.5
    assert len(summary["discrepancy"]) == 3
