"""Well-posedness diagnostics: exploration measure, coercivity estimates, RIP scans and loss landscapes."""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from netkernel.core.basis import BasisSpec
from netkernel.core.errors import (
    ConfigError,
    DegenerateDenominatorError,
    DimensionMismatchError,
    EmptyMeasureError,
)
from netkernel.core.model import eval_kernel, pairwise_diffs
from netkernel.core.simulate import TrajectoryData
from netkernel.core.tensors import RegressionBlock
from netkernel.core.utils.logging import get_logger
from netkernel.core.utils.parallel import chunk_ranges, ordered_map

logger = get_logger(__name__)

MIN_PROBES = 100
LOCAL_MIN_SLACK = 1e-12
SPURIOUS_DISTANCE_CELLS = 1.5
SPURIOUS_LOSS_FRACTION = 1e-3
DEGENERATE_DENOMINATOR = 1e-14

# Upper bounds on the Gaussian coercivity ratio for d = 1, 2, 3
GAUSSIAN_COERCIVITY_BOUNDS = {1: float(np.sqrt(4.0 / 15.0)), 2: 0.1269, 3: 0.2661}

KernelLike = Union[np.ndarray, Sequence[float], Callable[[np.ndarray], np.ndarray]]


@dataclass(eq=False)
class EmpiricalMeasure:
    """Pairwise differences r_ij(t_l), i ≠ j, l < L, over all trajectories, with uniform weights."""

    samples: np.ndarray
    weights: np.ndarray

    @classmethod
    def uniform(cls, samples: np.ndarray) -> "EmpiricalMeasure":
        samples = np.asarray(samples, dtype=float)
        n = samples.shape[0]
        weights = np.full(n, 1.0 / n) if n else np.zeros(0)
        return cls(samples=samples, weights=weights)

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    @property
    def dim_d(self) -> int:
        return self.samples.shape[1]


def exploration_measure(data: TrajectoryData) -> EmpiricalMeasure:
    """Collect r_ij(t_l) for l = 0..L−1 in (m, l, i, j) order."""
    r = pairwise_diffs(data.states[:, :-1])
    N = data.N
    mask = ~np.eye(N, dtype=bool)
    samples = r[:, :, mask, :].reshape(-1, data.d)
    return EmpiricalMeasure.uniform(samples)


def _kernel_values(kernel: KernelLike, basis: Optional[BasisSpec], samples: np.ndarray) -> np.ndarray:
    if callable(kernel):
        return np.asarray(kernel(samples), dtype=float)
    return eval_kernel(basis, np.asarray(kernel, dtype=float), samples)


def weighted_l2(values: np.ndarray, measure: EmpiricalMeasure) -> float:
    """sqrt(Σ_s w_s |values_s|²) for per-sample vectors ``values`` of shape (S, d)."""
    if measure.size == 0:
        raise EmptyMeasureError("The exploration measure has no samples")
    sq = np.sum(np.reshape(values, (measure.size, -1)) ** 2, axis=1)
    return float(np.sqrt(np.dot(measure.weights, sq)))


def l2rho_norm(basis: Optional[BasisSpec], coef_diff: KernelLike, measure: EmpiricalMeasure) -> float:
    """‖Φ‖ in L²(ρ) for Φ = Σ coef_diff_k ψ_k, or for any kernel callable on difference vectors."""
    if measure.size == 0:
        raise EmptyMeasureError("The exploration measure has no samples")
    return weighted_l2(_kernel_values(coef_diff, basis, measure.samples), measure)


def min_singval_sq(block: RegressionBlock) -> Tuple[float, float]:
    """(σ²_min(design)/M, condition number) of a regression block.

    Compressed blocks keep the singular values of the stacked design, so either form works.
    """
    s = linalg.svdvals(block.design) if block.design.size else np.zeros(0)
    if block.n_rows < block.n_cols or s.size < block.n_cols:
        s_min = 0.0
    else:
        s_min = float(s[-1])
    s_max = float(s[0]) if s.size else 0.0
    cond = s_max / s_min if s_min > 0 else float("inf")
    return s_min**2 / max(block.n_trajectories, 1), cond


def basis_sup_bound(basis: BasisSpec, measure: EmpiricalMeasure) -> float:
    """Largest |ψ_k(r)| over k and the measure's samples."""
    if measure.size == 0:
        raise EmptyMeasureError("The exploration measure has no samples")
    values = basis.evaluate(measure.samples)
    return float(np.linalg.norm(values, axis=-2).max())


# RIP scans


@dataclass(eq=False)
class RipReport:
    ratios: np.ndarray
    C: float
    delta: float

    @property
    def normalized(self) -> np.ndarray:
        return self.ratios / self.C if self.C > 0 else np.zeros_like(self.ratios)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "C": self.C,
            "delta": self.delta,
            "n_probe": int(self.ratios.size),
            "ratio_min": float(self.ratios.min()),
            "ratio_max": float(self.ratios.max()),
        }


def _unit_vectors(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def rip_scan(sensing_blocks: np.ndarray, n_probe: int, seed: int, threads: Optional[int] = None) -> RipReport:
    """RIP ratios R = (1/M) Σ_m |uᵀ A_m v|² over random unit pairs, normalised by C = (max + min)/2."""
    A = np.asarray(sensing_blocks, dtype=float)
    if A.ndim != 3:
        raise DimensionMismatchError(f"Sensing matrices must have shape (M, rows, cols), got {A.shape}")
    if n_probe < MIN_PROBES:
        raise ConfigError(f"Invalid n_probe={n_probe}. Must be >= {MIN_PROBES}", n_probe=n_probe)
    rng = np.random.default_rng(seed)
    U = _unit_vectors(rng, n_probe, A.shape[1])
    V = _unit_vectors(rng, n_probe, A.shape[2])

    def ratios(probes: range) -> np.ndarray:
        s = slice(probes.start, probes.stop)
        projections = np.einsum("sj,mjk,sk->sm", U[s], A, V[s])
        return np.mean(projections**2, axis=1)

    R = np.concatenate(ordered_map(ratios, chunk_ranges(n_probe, 256), threads))
    hi, lo = float(R.max()), float(R.min())
    C = 0.5 * (hi + lo)
    delta = (hi - lo) / (hi + lo) if hi + lo > 0 else 1.0
    logger.debug(f"RIP scan over {n_probe} probes: C={C:.4e}, delta={delta:.4f}")
    return RipReport(ratios=R, C=C, delta=delta)


def ips_sensing_matrices(basis: BasisSpec, M: int, seed: int, N: int = 3) -> np.ndarray:
    """A_m[j, k] = ψ_k(X^{j+1} − X^0) for standard-Gaussian scalar states X of N agents."""
    if basis.dim_d != 1:
        raise DimensionMismatchError(f"IPS sensing matrices need a scalar basis, got d={basis.dim_d}")
    X = np.random.default_rng(seed).standard_normal((M, N, 1))
    r = X[:, 1:] - X[:, :1]
    return basis.evaluate(r)[:, :, 0, :]


def gaussian_sensing_matrices(M: int, rows: int, cols: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((M, rows, cols))


# Loss landscapes


@dataclass(eq=False)
class LandscapeReport:
    theta: np.ndarray
    loss: np.ndarray
    truth: Tuple[float, float]
    local_minima: List[Tuple[int, int, float]] = field(default_factory=list)
    spurious_minima: List[Tuple[int, int, float]] = field(default_factory=list)

    def rows(self) -> List[Dict[str, float]]:
        """Grid as (theta1, theta2, loss) records."""
        t1, t2 = np.meshgrid(self.theta, self.theta, indexing="ij")
        return [
            {"theta1": float(a), "theta2": float(b), "loss": float(v)}
            for a, b, v in zip(t1.ravel(), t2.ravel(), self.loss.ravel())
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid": int(self.theta.size),
            "truth": list(self.truth),
            "loss_max": float(self.loss.max()),
            "local_minima": [list(m) for m in self.local_minima],
            "spurious_minima": [list(m) for m in self.spurious_minima],
        }


def _angle_vectors(theta: np.ndarray) -> np.ndarray:
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def grid_local_minima(loss: np.ndarray, slack: float = LOCAL_MIN_SLACK) -> List[Tuple[int, int, float]]:
    """Cells strictly below all 8 neighbours (periodic grid) by more than ``slack``."""
    is_min = np.ones(loss.shape, dtype=bool)
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            if da == 0 and db == 0:
                continue
            neighbour = np.roll(np.roll(loss, da, axis=0), db, axis=1)
            is_min &= loss < neighbour - slack
    return [(int(a), int(b), float(loss[a, b])) for a, b in zip(*np.nonzero(is_min))]


def _torus_cells(index: int, angle: float, grid: int) -> float:
    delta = abs(index - angle * grid / (2 * np.pi)) % grid
    return min(delta, grid - delta)


def landscape_scan(theta_grid: int, sensing_blocks: np.ndarray, truth: Tuple[float, float]) -> LandscapeReport:
    """Evaluate (1/M) Σ_m |U*ᵀA_mV* − UᵀA_mV|² for unit U, V parameterised by angles on [0, 2π)².

    Minima further than 1.5 cells from both the truth and its antipode, and above 1e-3 of the grid
    maximum, are reported as spurious.
    """
    A = np.asarray(sensing_blocks, dtype=float)
    if A.ndim != 3 or A.shape[1:] != (2, 2):
        raise DimensionMismatchError(f"Landscapes need 2x2 sensing matrices, got {A.shape}")
    if theta_grid < 3:
        raise ConfigError(f"Invalid landscape grid {theta_grid}. Must be >= 3")
    theta = 2 * np.pi * np.arange(theta_grid) / theta_grid
    W = _angle_vectors(theta)
    u_star, v_star = _angle_vectors(np.asarray(truth, dtype=float))
    target = np.einsum("j,mjk,k->m", u_star, A, v_star)

    def rows(block: range) -> np.ndarray:
        P = np.einsum("aj,mjk,bk->abm", W[block.start : block.stop], A, W)
        return np.mean((target - P) ** 2, axis=-1)

    loss = np.concatenate(ordered_map(rows, chunk_ranges(theta_grid, 16)), axis=0)

    minima = grid_local_minima(loss)
    antipode = ((truth[0] + np.pi) % (2 * np.pi), (truth[1] + np.pi) % (2 * np.pi))
    floor = SPURIOUS_LOSS_FRACTION * float(loss.max())
    spurious = []
    for a, b, value in minima:
        near = [
            max(_torus_cells(a, t1, theta_grid), _torus_cells(b, t2, theta_grid)) <= SPURIOUS_DISTANCE_CELLS
            for t1, t2 in (truth, antipode)
        ]
        if not any(near) and value > floor:
            spurious.append((a, b, value))
    return LandscapeReport(theta, loss, (float(truth[0]), float(truth[1])), minima, spurious)


# Gaussian coercivity


@dataclass(frozen=True)
class CoercivityReport:
    d: int
    ratio: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.ratio <= self.bound

    def to_dict(self) -> Dict[str, Any]:
        return {"d": self.d, "ratio": self.ratio, "bound": self.bound, "within_bound": self.within_bound}


def gaussian_coercivity_mc(
    d: int, radial_fn: Callable[[np.ndarray], np.ndarray], n_mc: int, seed: int, chunk: int = 100_000
) -> CoercivityReport:
    """Estimate E[φ(|r12|)φ(|r13|)cos∠(r12, r13)] / E[φ(|r12|)²] for i.i.d. standard Gaussian X¹, X², X³."""
    if d not in GAUSSIAN_COERCIVITY_BOUNDS:
        raise ConfigError(f"Invalid d={d}. Must be one of {sorted(GAUSSIAN_COERCIVITY_BOUNDS)}", d=d)
    if n_mc < 1:
        raise ConfigError(f"Invalid n_mc={n_mc}. Must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(len(chunk_ranges(n_mc, chunk)))

    def partial(args) -> Tuple[float, float]:
        block, seq = args
        X = np.random.default_rng(seq).standard_normal((len(block), 3, d))
        r12, r13 = X[:, 1] - X[:, 0], X[:, 2] - X[:, 0]
        n12, n13 = np.linalg.norm(r12, axis=1), np.linalg.norm(r13, axis=1)
        f12, f13 = np.asarray(radial_fn(n12), dtype=float), np.asarray(radial_fn(n13), dtype=float)
        denom = n12 * n13
        cosine = np.divide(np.sum(r12 * r13, axis=1), denom, out=np.zeros_like(denom), where=denom > 0)
        return float(np.sum(f12 * f13 * cosine)), float(np.sum(f12**2))

    sums = ordered_map(partial, list(zip(chunk_ranges(n_mc, chunk), seeds)))
    numerator = sum(s[0] for s in sums) / n_mc
    denominator = sum(s[1] for s in sums) / n_mc
    if denominator < DEGENERATE_DENOMINATOR:
        raise DegenerateDenominatorError(f"E[phi^2] = {denominator:.3e} is too small", denominator=denominator)
    ratio = numerator / denominator
    report = CoercivityReport(d=d, ratio=float(ratio), bound=GAUSSIAN_COERCIVITY_BOUNDS[d])
    logger.debug(f"Gaussian coercivity d={d}: ratio={ratio:.4f}, bound={report.bound:.4f}")
    return report
