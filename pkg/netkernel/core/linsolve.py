"""Dense linear-algebra kernels shared by the estimators.

Regularized least squares, nonnegative least squares (Lawson-Hanson), the top singular triple,
orthogonal Procrustes and seeded K-means. All functions are pure and thread-safe.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import nnls as _scipy_nnls
from sklearn.cluster import KMeans

from netkernel.core.errors import (
    ConfigError,
    IterationLimitError,
    NonFiniteInputError,
    RankDeficientError,
    RegularizerError,
    SingularSystemError,
)
from netkernel.core.utils.logging import get_logger

logger = get_logger(__name__)

LCURVE_GRID = np.logspace(-12, 0, 20)


class RegularizerMode(str, Enum):
    NONE = "none"
    PSEUDO_INVERSE = "pinv"
    MIN_NORM = "minnorm"
    TIKHONOV_ID = "tikhonov_id"
    TIKHONOV_GENERALIZED = "tikhonov_generalized"


@dataclass(frozen=True)
class Regularizer:
    """Regularization applied by :func:`solve_ls`.

    ``lam=None`` on a Tikhonov mode selects lambda by the L-curve corner.
    """

    mode: RegularizerMode = RegularizerMode.NONE
    rcond: float = 1e-10
    lam: Optional[float] = None
    penalty: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "mode", RegularizerMode(self.mode))
        if self.lam is not None and self.lam < 0:
            raise RegularizerError(f"Invalid lambda {self.lam}. Must be >= 0")
        if self.mode == RegularizerMode.PSEUDO_INVERSE and not self.rcond > 0:
            raise RegularizerError(f"Invalid rcond {self.rcond}. Must be > 0")
        if self.mode == RegularizerMode.TIKHONOV_GENERALIZED:
            if self.penalty is None:
                raise RegularizerError("TikhonovGeneralized requires a penalty matrix")
            penalty = np.asarray(self.penalty, dtype=float)
            _check_penalty(penalty)
            object.__setattr__(self, "penalty", penalty)

    @classmethod
    def none(cls) -> "Regularizer":
        return cls(RegularizerMode.NONE)

    @classmethod
    def pinv(cls, rcond: float = 1e-10) -> "Regularizer":
        return cls(RegularizerMode.PSEUDO_INVERSE, rcond=rcond)

    @classmethod
    def min_norm(cls) -> "Regularizer":
        return cls(RegularizerMode.MIN_NORM)

    @classmethod
    def tikhonov(cls, lam: Optional[float] = None) -> "Regularizer":
        return cls(RegularizerMode.TIKHONOV_ID, lam=lam)

    @classmethod
    def generalized(cls, penalty: np.ndarray, lam: Optional[float] = None) -> "Regularizer":
        return cls(RegularizerMode.TIKHONOV_GENERALIZED, lam=lam, penalty=penalty)

    @property
    def is_tikhonov(self) -> bool:
        return self.mode in (RegularizerMode.TIKHONOV_ID, RegularizerMode.TIKHONOV_GENERALIZED)

    def penalty_for(self, n: int) -> np.ndarray:
        if self.mode == RegularizerMode.TIKHONOV_GENERALIZED:
            if self.penalty.shape != (n, n):
                raise RegularizerError(f"Penalty shape {self.penalty.shape} does not match {n} unknowns")
            return self.penalty
        return np.eye(n)


def _check_penalty(penalty: np.ndarray) -> None:
    if penalty.ndim != 2 or penalty.shape[0] != penalty.shape[1]:
        raise RegularizerError(f"Penalty must be square, got shape {penalty.shape}")
    if not np.all(np.isfinite(penalty)):
        raise RegularizerError("Penalty has non-finite entries")
    scale = max(np.linalg.norm(penalty), np.finfo(float).tiny)
    if np.linalg.norm(penalty - penalty.T) > 1e-12 * scale:
        raise RegularizerError("Penalty matrix is not symmetric")
    if np.linalg.eigvalsh(0.5 * (penalty + penalty.T)).min() < -1e-10 * scale:
        raise RegularizerError("Penalty matrix is not positive semidefinite")


@dataclass(frozen=True)
class Rank1Factor:
    u: np.ndarray
    sigma: float
    v: np.ndarray

    def matrix(self) -> np.ndarray:
        return self.sigma * np.outer(self.u, self.v)


def _as_finite(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError(f"{name} contains non-finite entries")
    return arr


def _rank_cutoff(A: np.ndarray) -> float:
    return max(A.shape) * np.finfo(float).eps


def _tikhonov_solve(A: np.ndarray, b: np.ndarray, lam: float, penalty: np.ndarray) -> np.ndarray:
    """Solve (AᵀA + lam·P) x = Aᵀb; eigendecomposition fallback when Cholesky fails."""
    gram = A.T @ A + lam * penalty
    rhs = A.T @ b
    try:
        factor = linalg.cho_factor(gram, check_finite=False)
        return linalg.cho_solve(factor, rhs, check_finite=False)
    except linalg.LinAlgError:
        evals, evecs = linalg.eigh(0.5 * (gram + gram.T))
        cutoff = max(evals.max(), 0.0) * gram.shape[0] * np.finfo(float).eps
        inv = np.where(evals > cutoff, 1.0 / np.where(evals > cutoff, evals, 1.0), 0.0)
        return evecs @ (inv * (evecs.T @ rhs))


def solve_ls(A, b, reg: Optional[Regularizer] = None, residual_offset: float = 0.0) -> np.ndarray:
    """Least squares with the requested regularization.

    Args:
        A: Design matrix (m×n)
        b: Response vector (m)
        reg: Regularizer (default: none)
        residual_offset: Constant squared residual not represented by (A, b); only used by the
            L-curve when ``A`` is a compressed (QR) form of a taller system.

    Returns:
        np.ndarray: Solution vector (n)
    """
    A = _as_finite("Design", A)
    b = _as_finite("Response", b)
    reg = reg or Regularizer.none()
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise NonFiniteInputError(f"Incompatible shapes A={A.shape}, b={b.shape}")
    n = A.shape[1]

    if reg.mode == RegularizerMode.NONE:
        x, _, rank, _ = linalg.lstsq(A, b, cond=_rank_cutoff(A))
        if rank < n:
            raise SingularSystemError(f"Design has rank {rank} < {n} unknowns", rank=int(rank), unknowns=n)
        return x
    if reg.mode == RegularizerMode.PSEUDO_INVERSE:
        return linalg.lstsq(A, b, cond=reg.rcond)[0]
    if reg.mode == RegularizerMode.MIN_NORM:
        return linalg.lstsq(A, b, cond=_rank_cutoff(A))[0]

    penalty = reg.penalty_for(n)
    lam = reg.lam
    if lam is None:
        lam = lcurve_select(A, b, penalty, residual_offset=residual_offset)
    if reg.mode == RegularizerMode.TIKHONOV_ID and lam > 0:
        # Augmented system avoids squaring the condition number
        A_aug = np.vstack([A, np.sqrt(lam) * np.eye(n)])
        b_aug = np.concatenate([b, np.zeros(n)])
        return linalg.lstsq(A_aug, b_aug, cond=_rank_cutoff(A_aug))[0]
    if lam == 0:
        return linalg.lstsq(A, b, cond=_rank_cutoff(A))[0]
    return _tikhonov_solve(A, b, lam, penalty)


def lcurve_select(
    A: np.ndarray, b: np.ndarray, penalty: Optional[np.ndarray] = None, residual_offset: float = 0.0
) -> float:
    """Pick lambda at the maximum-curvature corner of (log residual, log penalty).

    The grid is 20 log-spaced points in [1e-12, 1]·‖AᵀA‖₂.
    """
    n = A.shape[1]
    penalty = np.eye(n) if penalty is None else penalty
    scale = np.linalg.norm(A, 2) ** 2
    if scale == 0:
        return 0.0
    lambdas = LCURVE_GRID * scale
    log_res = np.empty(lambdas.size)
    log_pen = np.empty(lambdas.size)
    tiny = np.finfo(float).tiny
    for idx, lam in enumerate(lambdas):
        x = _tikhonov_solve(A, b, lam, penalty)
        residual = np.sum((A @ x - b) ** 2) + residual_offset
        log_res[idx] = 0.5 * np.log(max(residual, tiny))
        log_pen[idx] = 0.5 * np.log(max(float(x @ penalty @ x), tiny))

    t = np.log(lambdas)
    dr, dp = np.gradient(log_res, t), np.gradient(log_pen, t)
    ddr, ddp = np.gradient(dr, t), np.gradient(dp, t)
    denom = (dr**2 + dp**2) ** 1.5
    with np.errstate(divide="ignore", invalid="ignore"):
        curvature = np.where(denom > 0, (dr * ddp - ddr * dp) / denom, -np.inf)
    if not np.any(np.isfinite(curvature)):
        logger.warning("L-curve is flat; falling back to the smallest grid lambda")
        return float(lambdas[0])
    best = int(np.nanargmax(np.where(np.isfinite(curvature), curvature, -np.inf)))
    return float(lambdas[best])


def nnls(A, b) -> np.ndarray:
    """Nonnegative least squares by the Lawson-Hanson active-set method (at most 3n iterations)."""
    A = _as_finite("Design", A)
    b = _as_finite("Response", b)
    n = A.shape[1]
    try:
        x, _ = _scipy_nnls(A, b, maxiter=3 * n)
    except RuntimeError as e:
        raise IterationLimitError(f"NNLS did not converge in {3 * n} iterations: {e}", unknowns=n) from e
    return x


def rank1_factor(Z) -> Rank1Factor:
    """Top singular triple; the largest-magnitude entry of ``v`` is positive (lowest index on ties)."""
    Z = _as_finite("Matrix", Z)
    if Z.ndim != 2 or min(Z.shape) < 1:
        raise NonFiniteInputError(f"Expected a non-empty matrix, got shape {Z.shape}")
    U, s, Vt = linalg.svd(Z, full_matrices=False, check_finite=False)
    u, v = U[:, 0].copy(), Vt[0].copy()
    pivot = int(np.argmax(np.abs(v)))
    if v[pivot] < 0:
        u, v = -u, -v
    return Rank1Factor(u=u, sigma=float(s[0]), v=v)


def procrustes_orthonormalize(V) -> np.ndarray:
    """Nearest column-orthonormal matrix UWᵀ of V = UΣWᵀ."""
    V = _as_finite("Matrix", V)
    n_rows, n_cols = V.shape
    if n_rows < n_cols:
        raise RankDeficientError(f"Need at least as many rows as columns, got {V.shape}")
    U, s, Wt = linalg.svd(V, full_matrices=False, check_finite=False)
    if s[0] == 0 or s[-1] < 1e-12 * s[0]:
        raise RankDeficientError(
            f"Matrix is rank deficient: smallest singular value {s[-1]:.3e}", singular_values=s.tolist()
        )
    return U @ Wt


def kmeans(points, K: int, seed: int, n_init: int = 10) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded K-means (k-means++ initialisation, best of ``n_init`` restarts).

    Labels are renumbered by first appearance, so the partition alone determines them; centroids are
    the means of their assigned points.
    """
    X = _as_finite("Points", points)
    if X.ndim == 1:
        X = X[:, None]
    if K < 1 or X.shape[0] < K:
        raise ConfigError(f"Invalid K={K} for {X.shape[0]} points", K=K)

    model = KMeans(n_clusters=K, init="k-means++", n_init=n_init, random_state=seed)
    raw = model.fit_predict(X)

    order = {}
    for label in raw:
        order.setdefault(int(label), len(order))
    labels = np.array([order[int(label)] for label in raw], dtype=int)
    centroids = np.empty((K, X.shape[1]))
    for old, new in order.items():
        centroids[new] = X[labels == new].mean(axis=0)
    # Clusters sklearn left empty keep their fitted centres
    for k, centre in enumerate(model.cluster_centers_):
        if int(k) not in order:
            logger.warning(f"K-means cluster {k} ended empty; keeping its fitted centre")
            centroids[len(order)] = centre
            order[int(k)] = len(order)
    return labels, centroids
