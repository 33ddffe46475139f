"""Estimation error metrics, the trajectory-prediction bound, and leader/follower classification."""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from netkernel.core.basis import BasisSpec
from netkernel.core.diagnostics import EmpiricalMeasure, KernelLike, l2rho_norm, weighted_l2
from netkernel.core.errors import (
    ConfigError,
    DegenerateDenominatorError,
    EmptyMeasureError,
    NoLeadersError,
    ShapeMismatchError,
    ZeroTrueKernelError,
)
from netkernel.core.linsolve import kmeans
from netkernel.core.model import WeightMatrix, eval_kernel
from netkernel.core.simulate import TrajectoryData
from netkernel.core.utils.logging import get_logger

logger = get_logger(__name__)

FINITE_DIFFERENCE_STEP = 1e-5
LEADER_GAP_TOL = 1e-9

GraphLike = Union[WeightMatrix, np.ndarray]
PathsLike = Union[TrajectoryData, np.ndarray]


def _entries(a: GraphLike) -> np.ndarray:
    return a.entries if isinstance(a, WeightMatrix) else np.asarray(a, dtype=float)


def _states(paths: PathsLike) -> np.ndarray:
    return paths.states if isinstance(paths, TrajectoryData) else np.asarray(paths, dtype=float)


def graph_error(a_true: GraphLike, a_hat: GraphLike) -> float:
    """‖a − â‖_F / ‖a‖_F."""
    true, est = _entries(a_true), _entries(a_hat)
    if true.shape != est.shape:
        raise ShapeMismatchError(f"Graph shapes differ: {true.shape} vs {est.shape}")
    scale = np.linalg.norm(true)
    if scale == 0:
        raise DegenerateDenominatorError("The true weight matrix is zero")
    return float(np.linalg.norm(true - est) / scale)


def kernel_error(
    basis: BasisSpec,
    c_true: KernelLike,
    c_hat: np.ndarray,
    measure: EmpiricalMeasure,
    true_basis: Optional[BasisSpec] = None,
) -> float:
    """‖Φ − Φ̂‖_{L²(ρ)} / ‖Φ‖_{L²(ρ)}.

    The truth may live in a different basis (``true_basis``) or be any kernel callable on difference
    vectors, which covers hypothesis spaces that do not contain it.
    """
    if measure.size == 0:
        raise EmptyMeasureError("The exploration measure has no samples")
    if callable(c_true):
        truth = np.asarray(c_true(measure.samples), dtype=float)
    else:
        truth = eval_kernel(true_basis or basis, np.asarray(c_true, dtype=float), measure.samples)
    estimate = eval_kernel(basis, np.asarray(c_hat, dtype=float), measure.samples)
    scale = weighted_l2(truth, measure)
    if scale == 0:
        raise ZeroTrueKernelError("The true kernel vanishes on the exploration measure")
    return weighted_l2(truth - estimate, measure) / scale


def per_trajectory_errors(true_traj: PathsLike, pred_traj: PathsLike) -> np.ndarray:
    """Relative discrete L²(0, T) error of each predicted path against its reference path."""
    true, pred = _states(true_traj), _states(pred_traj)
    if true.shape != pred.shape:
        raise ShapeMismatchError(f"Trajectory shapes differ: {true.shape} vs {pred.shape}")
    axes = tuple(range(1, true.ndim))
    scale = np.sqrt(np.sum(true**2, axis=axes))
    if np.any(scale == 0):
        raise DegenerateDenominatorError("A reference trajectory is identically zero")
    return np.sqrt(np.sum((pred - true) ** 2, axis=axes)) / scale


def trajectory_error(true_traj: PathsLike, pred_traj: PathsLike) -> float:
    """Mean relative trajectory error over test paths sharing initial conditions and noise."""
    return float(per_trajectory_errors(true_traj, pred_traj).mean())


def trajectory_error_stats(true_traj: PathsLike, pred_traj: PathsLike) -> Tuple[float, float]:
    """(mean, standard deviation) of the per-trajectory relative errors."""
    errors = per_trajectory_errors(true_traj, pred_traj)
    return float(errors.mean()), float(errors.std())


def empirical_trajectory_gap(true_traj: PathsLike, pred_traj: PathsLike) -> float:
    """sup over time of E‖X̂(t) − X(t)‖²_F across paths."""
    true, pred = _states(true_traj), _states(pred_traj)
    if true.shape != pred.shape:
        raise ShapeMismatchError(f"Trajectory shapes differ: {true.shape} vs {pred.shape}")
    sq = np.sum((pred - true) ** 2, axis=(2, 3))
    return float(sq.mean(axis=0).max())


def basis_bound(basis: BasisSpec, measure: EmpiricalMeasure, h: float = FINITE_DIFFERENCE_STEP) -> float:
    """C₀ = max over samples and k of |ψ_k| + |∇ψ_k|, gradients by central differences."""
    if measure.size == 0:
        raise EmptyMeasureError("The exploration measure has no samples")
    x = measure.samples
    values = np.linalg.norm(basis.evaluate(x), axis=-2)
    jac_sq = np.zeros_like(values)
    for axis in range(basis.dim_d):
        step = np.zeros(basis.dim_d)
        step[axis] = h
        derivative = (basis.evaluate(x + step) - basis.evaluate(x - step)) / (2 * h)
        jac_sq += np.sum(derivative**2, axis=-2)
    return float(np.max(values + np.sqrt(jac_sq)))


def trajectory_bound(
    a: GraphLike, a_hat: GraphLike, c: np.ndarray, c_hat: np.ndarray, basis_bound: float, T: float
) -> float:
    """C₁T²·exp(2C₁C₂T)·(C₂‖a − â‖²_F + ‖ĉ − c‖²) with C₁ = 2pC₀² and C₂ = ‖ĉ‖² + ‖c‖²."""
    c, c_hat = np.asarray(c, dtype=float), np.asarray(c_hat, dtype=float)
    C1 = 2 * c.size * basis_bound**2
    C2 = float(c_hat @ c_hat + c @ c)
    gap = C2 * float(np.sum((_entries(a) - _entries(a_hat)) ** 2)) + float(np.sum((c_hat - c) ** 2))
    if gap == 0:
        return 0.0
    with np.errstate(over="ignore"):
        return float(C1 * T**2 * np.exp(2 * C1 * C2 * T) * gap)


# Leaders and followers


@dataclass(frozen=True)
class LeadershipConfig:
    alpha: float = 0.8
    beta: float = 0.2

    def __post_init__(self):
        if abs(self.alpha + self.beta - 1.0) > 1e-12:
            raise ConfigError(f"alpha + beta must be 1, got {self.alpha + self.beta}")
        if not self.alpha > self.beta:
            raise ConfigError(f"alpha must exceed beta, got alpha={self.alpha}, beta={self.beta}")


@dataclass(frozen=True)
class LeaderClassification:
    leaders: Tuple[int, ...]
    groups: Tuple[Tuple[int, ...], ...]
    features: Tuple[float, ...]

    def group_of(self, agent: int) -> int:
        for k, group in enumerate(self.groups):
            if agent in group:
                return k
        raise KeyError(agent)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "leaders": list(self.leaders),
            "groups": [list(g) for g in self.groups],
            "features": list(self.features),
        }


def leadership_features(a: GraphLike, cfg: Optional[LeadershipConfig] = None) -> np.ndarray:
    """L_i = α‖a_i·‖₁ + β‖a_·i‖₁."""
    cfg = cfg or LeadershipConfig()
    A = np.abs(_entries(a))
    return cfg.alpha * A.sum(axis=1) + cfg.beta * A.sum(axis=0)


def identify_leaders(features: np.ndarray, seed: int, n_leaders_hint: Optional[int] = None) -> List[int]:
    if n_leaders_hint is not None:
        if not 1 <= n_leaders_hint < features.size:
            raise ConfigError(f"Invalid n_leaders_hint={n_leaders_hint} for N={features.size}")
        order = np.argsort(-features, kind="stable")
        return sorted(int(i) for i in order[:n_leaders_hint])
    labels, centroids = kmeans(features[:, None], 2, seed)
    gap = abs(float(centroids[0, 0] - centroids[1, 0]))
    if gap < LEADER_GAP_TOL:
        raise NoLeadersError(f"Leadership features form no distinguishable clusters (gap {gap:.2e})", gap=gap)
    leader_label = int(np.argmax(centroids[:, 0]))
    return [int(i) for i in np.nonzero(labels == leader_label)[0]]


def assign_followers(
    A: np.ndarray, leaders: Sequence[int], cfg: LeadershipConfig, order: str = "global"
) -> List[List[int]]:
    """Grow one group per leader by repeatedly adding the follower with the strongest tie to a group.

    ``global`` picks the best (follower, group) pair over all unassigned followers each round, ties to the
    lowest follower then group index; ``sequential`` visits followers in index order.
    """
    if order not in ("global", "sequential"):
        raise ConfigError(f"Invalid assignment order '{order}'. Must be one of: ['global', 'sequential']")
    A = np.abs(A)
    groups = [[leader] for leader in leaders]
    unassigned = [j for j in range(A.shape[0]) if j not in set(leaders)]

    def scores(followers: List[int]) -> np.ndarray:
        return np.array(
            [[cfg.alpha * A[g, j].sum() + cfg.beta * A[j, g].sum() for g in groups] for j in followers]
        )

    while unassigned:
        if order == "global":
            table = scores(unassigned)
            flat = int(np.argmax(table))
            row, k = divmod(flat, len(groups))
            j = unassigned.pop(row)
        else:
            j = unassigned.pop(0)
            k = int(np.argmax(scores([j])[0]))
        groups[k].append(j)
    return [sorted(group) for group in groups]


def classify_leaders_followers(
    a: GraphLike,
    cfg: Optional[LeadershipConfig] = None,
    n_leaders_hint: Optional[int] = None,
    seed: int = 0,
    order: str = "global",
) -> LeaderClassification:
    """Two-means split of the leadership features, then greedy follower grouping around each leader."""
    cfg = cfg or LeadershipConfig()
    A = _entries(a)
    features = leadership_features(A, cfg)
    leaders = identify_leaders(features, seed, n_leaders_hint)
    groups = assign_followers(A, leaders, cfg, order)
    logger.info(f"Identified leaders {leaders}")
    return LeaderClassification(
        leaders=tuple(leaders),
        groups=tuple(tuple(g) for g in groups),
        features=tuple(float(f) for f in features),
    )


__all__ = [
    "LeaderClassification",
    "LeadershipConfig",
    "basis_bound",
    "classify_leaders_followers",
    "empirical_trajectory_gap",
    "graph_error",
    "kernel_error",
    "l2rho_norm",
    "leadership_features",
    "per_trajectory_errors",
    "trajectory_bound",
    "trajectory_error",
    "trajectory_error_stats",
]
