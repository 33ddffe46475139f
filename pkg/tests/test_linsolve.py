import hypothesis.extra.numpy as hyp_np
import hypothesis.strategies as st
import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import assume, given, settings
from scipy.optimize import nnls as scipy_nnls

from netkernel.core.errors import NonFiniteInputError, RankDeficientError, RegularizerError, SingularSystemError
from netkernel.core.linsolve import (
    LCURVE_GRID,
    Regularizer,
    kmeans,
    lcurve_select,
    nnls,
    procrustes_orthonormalize,
    rank1_factor,
    solve_ls,
)


def test_solve_ls_recovers_exact_solution(rng):
    A = rng.standard_normal((40, 5))
    x = rng.standard_normal(5)
    npt.assert_allclose(solve_ls(A, A @ x), x, atol=1e-10)


def test_solve_ls_rank_deficient_without_regularization_raises(rng):
    A = rng.standard_normal((20, 3))
    A = np.column_stack([A, A[:, 0]])
    with pytest.raises(SingularSystemError):
        solve_ls(A, rng.standard_normal(20))


def test_min_norm_and_pinv_agree_on_rank_deficient_system(rng):
    A = rng.standard_normal((20, 3))
    A = np.column_stack([A, A[:, 0]])
    b = rng.standard_normal(20)
    x_min = solve_ls(A, b, Regularizer.min_norm())
    x_pinv = solve_ls(A, b, Regularizer.pinv(1e-10))
    npt.assert_allclose(x_min, np.linalg.pinv(A) @ b, atol=1e-10)
    npt.assert_allclose(x_pinv, x_min, atol=1e-10)
    # Duplicated column splits the weight evenly
    assert x_min[0] == pytest.approx(x_min[3])


def test_tikhonov_shrinks_solution(rng):
    A = rng.standard_normal((30, 4))
    b = rng.standard_normal(30)
    plain = solve_ls(A, b)
    small = solve_ls(A, b, Regularizer.tikhonov(1e-6))
    large = solve_ls(A, b, Regularizer.tikhonov(1e3))
    npt.assert_allclose(small, plain, atol=1e-5)
    assert np.linalg.norm(large) < np.linalg.norm(plain)
    expected = np.linalg.solve(A.T @ A + 1e3 * np.eye(4), A.T @ b)
    npt.assert_allclose(large, expected, rtol=1e-8)


def test_generalized_tikhonov_uses_penalty(rng):
    A = rng.standard_normal((30, 3))
    b = rng.standard_normal(30)
    P = np.diag([1.0, 10.0, 100.0])
    x = solve_ls(A, b, Regularizer.generalized(P, lam=0.5))
    npt.assert_allclose(x, np.linalg.solve(A.T @ A + 0.5 * P, A.T @ b), rtol=1e-8)


@pytest.mark.parametrize(
    "penalty",
    [np.array([[1.0, 2.0], [0.0, 1.0]]), np.diag([1.0, -1.0]), np.ones(3)],
    ids=["asymmetric", "indefinite", "not-square"],
)
def test_invalid_penalty_rejected(penalty):
    with pytest.raises(RegularizerError):
        Regularizer.generalized(penalty)


def test_negative_lambda_rejected():
    with pytest.raises(RegularizerError):
        Regularizer.tikhonov(-1.0)


def test_non_finite_design_rejected():
    with pytest.raises(NonFiniteInputError):
        solve_ls(np.array([[np.nan, 1.0]]), np.array([1.0]))


def test_lcurve_lambda_lies_on_grid(rng):
    A = rng.standard_normal((50, 8)) @ np.diag(np.logspace(0, -8, 8))
    b = A @ np.ones(8) + 1e-3 * rng.standard_normal(50)
    lam = lcurve_select(A, b)
    grid = LCURVE_GRID * np.linalg.norm(A, 2) ** 2
    assert np.isclose(grid, lam, rtol=1e-12).any()


def test_lcurve_on_zero_matrix_is_zero():
    assert lcurve_select(np.zeros((4, 2)), np.ones(4)) == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_nnls_matches_reference_and_is_nonnegative(seed):
    gen = np.random.default_rng(seed)
    A, b = gen.standard_normal((12, 4)), gen.standard_normal(12)
    x = nnls(A, b)
    assert np.all(x >= 0)
    reference, _ = scipy_nnls(A, b)
    assert np.linalg.norm(A @ x - b) == pytest.approx(np.linalg.norm(A @ reference - b), rel=1e-6, abs=1e-8)


def test_nnls_clips_negative_direction():
    A = np.eye(2)
    npt.assert_allclose(nnls(A, np.array([1.0, -2.0])), [1.0, 0.0])


def test_rank1_factor_sign_convention(rng):
    u = rng.standard_normal(5)
    v = -np.abs(rng.standard_normal(3))
    factor = rank1_factor(np.outer(u, v))
    pivot = int(np.argmax(np.abs(factor.v)))
    assert factor.v[pivot] > 0
    npt.assert_allclose(factor.matrix(), np.outer(u, v), atol=1e-12)
    assert factor.sigma == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v))


@settings(max_examples=40, deadline=None)
@given(V=hyp_np.arrays(np.float64, (6, 2), elements=st.floats(-5, 5, allow_nan=False)))
def test_procrustes_output_is_orthonormal(V):
    s = np.linalg.svd(V, compute_uv=False)
    assume(s[0] > 1e-3 and s[-1] > 1e-6 * s[0])
    W = procrustes_orthonormalize(V)
    npt.assert_allclose(W.T @ W, np.eye(2), atol=1e-8)


def test_procrustes_is_nearest_orthonormal_matrix(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((5, 3)))
    npt.assert_allclose(procrustes_orthonormalize(Q), Q, atol=1e-12)


def test_procrustes_needs_tall_matrix():
    with pytest.raises(RankDeficientError):
        procrustes_orthonormalize(np.ones((2, 3)))


def test_kmeans_labels_follow_first_appearance():
    points = np.array([[5.0], [5.1], [0.0], [0.1], [5.05]])
    labels, centroids = kmeans(points, 2, seed=0)
    npt.assert_array_equal(labels, [0, 0, 1, 1, 0])
    npt.assert_allclose(centroids[:, 0], [5.05, 0.05], atol=1e-12)


def test_kmeans_is_deterministic_for_a_seed(rng):
    points = rng.standard_normal((40, 2))
    first = kmeans(points, 3, seed=7)
    second = kmeans(points, 3, seed=7)
    npt.assert_array_equal(first[0], second[0])
    npt.assert_allclose(first[1], second[1])


def test_procrustes_rejects_rank_deficient_matrix(rng):
    x = rng.standard_normal(6)
    with pytest.raises(RankDeficientError):
        procrustes_orthonormalize(np.column_stack([x, 2 * x]))
