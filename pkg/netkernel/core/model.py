"""Dynamical-system value types and the drift a·B(X)·c."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from netkernel.core.basis import BasisSpec
from netkernel.core.errors import ConfigError, DegreeOutOfRangeError, DimensionMismatchError, NonFiniteInputError
from netkernel.core.utils.logging import get_logger

logger = get_logger(__name__)

ROW_NORM_TOL = 1e-10
ENTRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Admissible weight matrix: nonnegative, zero diagonal, unit ℓ² rows or flagged all-zero rows."""

    entries: np.ndarray
    degenerate: Tuple[bool, ...] = field(default=())

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionMismatchError(f"Weight matrix must be square, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise NonFiniteInputError("Weight matrix has non-finite entries")
        if np.any(np.diag(entries) != 0):
            raise ConfigError("Weight matrix diagonal must be zero")
        if np.any(entries < -ENTRY_TOL) or np.any(entries > 1 + ENTRY_TOL):
            raise ConfigError("Weight matrix entries must lie in [0, 1]")
        norms = np.linalg.norm(entries, axis=1)
        zero_rows = norms == 0
        if np.any(~zero_rows & (np.abs(norms - 1) > ROW_NORM_TOL)):
            raise ConfigError("Weight matrix rows must have unit ℓ² norm or be all-zero")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "degenerate", tuple(bool(z) for z in zero_rows))

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @property
    def any_degenerate(self) -> bool:
        return any(self.degenerate)

    def off_diagonal_row(self, i: int) -> np.ndarray:
        """Row i without the diagonal entry, columns in ascending j."""
        return np.delete(self.entries[i], i)

    @classmethod
    def from_raw(cls, raw: np.ndarray) -> "WeightMatrix":
        """Zero the diagonal, clip negatives, and ℓ²-normalize each nonzero row."""
        raw = np.array(raw, dtype=float)
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
            raise DimensionMismatchError(f"Weight matrix must be square, got shape {raw.shape}")
        np.fill_diagonal(raw, 0.0)
        raw = np.clip(raw, 0.0, None)
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        out = np.divide(raw, norms, out=np.zeros_like(raw), where=norms > 0)
        return cls(np.clip(out, 0.0, 1.0))

    @classmethod
    def from_rows(cls, rows: Sequence[np.ndarray]) -> "WeightMatrix":
        """Assemble from off-diagonal rows of length N−1 (ascending j, skipping i)."""
        N = len(rows)
        raw = np.zeros((N, N))
        for i, row in enumerate(rows):
            raw[i, np.arange(N) != i] = row
        return cls.from_raw(raw)

    def to_dict(self) -> Dict[str, Any]:
        return {"N": self.N, "entries": self.entries.tolist(), "degenerate": list(self.degenerate)}

    @classmethod
    def from_dict(cls, spec: Dict[str, Any]) -> "WeightMatrix":
        return cls(np.asarray(spec["entries"], dtype=float))


class InitKind(str, Enum):
    UNIFORM_BOX = "uniform_box"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class InitialDistribution:
    kind: InitKind = InitKind.UNIFORM_BOX
    lo: float = 0.0
    hi: float = 1.0
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", InitKind(self.kind))
        if self.kind == InitKind.UNIFORM_BOX and not self.lo < self.hi:
            raise ConfigError(f"Invalid box [{self.lo}, {self.hi}]")
        if self.kind == InitKind.GAUSSIAN and not self.std > 0:
            raise ConfigError(f"Invalid std {self.std}")

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "InitialDistribution":
        return cls(InitKind.UNIFORM_BOX, lo=lo, hi=hi)

    @classmethod
    def gaussian(cls, mean: float = 0.0, std: float = 1.0) -> "InitialDistribution":
        return cls(InitKind.GAUSSIAN, mean=mean, std=std)

    def sample(self, rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
        if self.kind == InitKind.UNIFORM_BOX:
            return rng.uniform(self.lo, self.hi, size=shape)
        return rng.normal(self.mean, self.std, size=shape)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == InitKind.UNIFORM_BOX:
            return {"kind": self.kind.value, "lo": self.lo, "hi": self.hi}
        return {"kind": self.kind.value, "mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class SystemSpec:
    """Simulation settings: N agents in R^d, L Euler steps of size dt, noise strength sigma."""

    N: int
    d: int
    sigma: float
    dt: float
    L: int
    init: InitialDistribution = field(default_factory=InitialDistribution)
    seed: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ConfigError(f"Invalid N={self.N}. Must be >= 2")
        if self.L < 1:
            raise ConfigError(f"Invalid L={self.L}. Must be >= 1")
        if self.d < 1:
            raise ConfigError(f"Invalid d={self.d}. Must be >= 1")
        if self.sigma < 0:
            raise ConfigError(f"Invalid sigma={self.sigma}. Must be >= 0")
        if not self.dt > 0:
            raise ConfigError(f"Invalid dt={self.dt}. Must be > 0")

    @property
    def T(self) -> float:
        return self.L * self.dt

    def replace(self, **changes) -> "SystemSpec":
        values = {
            "N": self.N,
            "d": self.d,
            "sigma": self.sigma,
            "dt": self.dt,
            "L": self.L,
            "init": self.init,
            "seed": self.seed,
        }
        values.update(changes)
        return SystemSpec(**values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "d": self.d,
            "sigma": self.sigma,
            "dt": self.dt,
            "L": self.L,
            "init": self.init.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, spec: Dict[str, Any]) -> "SystemSpec":
        values = dict(spec)
        values["init"] = InitialDistribution(**values.get("init", {}))
        return cls(**values)


def _coef(basis: BasisSpec, c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape[0] != basis.p:
        raise DimensionMismatchError(f"Coefficient length {c.shape[0]} does not match basis size {basis.p}")
    if not np.all(np.isfinite(c)):
        raise NonFiniteInputError("Kernel coefficients must be finite")
    return c


def eval_kernel(basis: BasisSpec, c: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Φ(x) = Σ_k c_k ψ_k(x) for x of shape (..., d)."""
    c = _coef(basis, c)
    if c.ndim != 1:
        raise DimensionMismatchError("eval_kernel expects a coefficient vector")
    return (basis.evaluate(x) * c).sum(axis=-1)


@dataclass(frozen=True, eq=False)
class InteractionKernel:
    """A kernel Φ = Σ c_k ψ_k, callable on difference vectors of shape (..., d)."""

    basis: BasisSpec
    coef: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coef", _coef(self.basis, self.coef))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return eval_kernel(self.basis, self.coef, x)

    @property
    def dim_d(self) -> int:
        return self.basis.dim_d


def pairwise_diffs(X: np.ndarray) -> np.ndarray:
    """r[..., i, j, :] = X^j − X^i for X of shape (..., N, d)."""
    X = np.asarray(X, dtype=float)
    return X[..., None, :, :] - X[..., :, None, :]


def pair_kernel_values(basis: BasisSpec, c: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Φ_i(r_ij) over a batch of pair differences r[..., N, N, d] with the diagonal forced to zero.

    ``c`` is either a vector of length p or a per-agent matrix of shape (p, N) whose column i is
    the kernel acting on agent i.
    """
    N = r.shape[-2]
    F = basis.evaluate(r)
    if c.ndim == 1:
        phi = (F * c).sum(axis=-1)
    else:
        if c.shape[1] != N:
            raise DimensionMismatchError(f"Coefficient matrix has {c.shape[1]} columns, expected N={N}")
        phi = (F * c.T[:, None, None, :]).sum(axis=-1)
    idx = np.arange(N)
    phi[..., idx, idx, :] = 0.0
    return phi


def drift_batch(a: WeightMatrix, basis: BasisSpec, c: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Drift for a batch of states X[..., N, d]."""
    X = np.asarray(X, dtype=float)
    if X.shape[-2] != a.N:
        raise DimensionMismatchError(f"State has {X.shape[-2]} agents, weight matrix has {a.N}")
    if X.shape[-1] != basis.dim_d:
        raise DimensionMismatchError(f"State dimension {X.shape[-1]} does not match basis dimension {basis.dim_d}")
    c = _coef(basis, c)
    phi = pair_kernel_values(basis, c, pairwise_diffs(X))
    return (a.entries[:, :, None] * phi).sum(axis=-2)


def drift(a: WeightMatrix, basis: BasisSpec, c: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Row i is Σ_{j≠i} a_ij Φ(X^j − X^i); c may be a vector or a (p, N) per-agent matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError(f"Expected a state of shape (N, d), got {X.shape}")
    return drift_batch(a, basis, c, X[None])[0]


def sample_weight_matrix(N: int, degree: int, seed: int) -> WeightMatrix:
    """Random sparse graph: ``degree`` in-neighbours per agent, Uniform[0,1] weights, unit rows."""
    if not 1 <= degree <= N - 1:
        raise DegreeOutOfRangeError(f"Invalid degree {degree}. Must be in [1, {N - 1}]", N=N, degree=degree)
    rng = np.random.default_rng(seed)
    raw = np.zeros((N, N))
    for i in range(N):
        others = np.delete(np.arange(N), i)
        support = rng.choice(others, size=degree, replace=False)
        raw[i, support] = rng.uniform(0.0, 1.0, size=degree)
    return WeightMatrix.from_raw(raw)


def circle_weight_matrix(N: int) -> WeightMatrix:
    """Directed circle: agent i follows agent (i + 1) mod N."""
    raw = np.zeros((N, N))
    raw[np.arange(N), (np.arange(N) + 1) % N] = 1.0
    return WeightMatrix.from_raw(raw)


@dataclass(frozen=True)
class LeaderFollowerGraph:
    a: WeightMatrix
    leaders: Tuple[int, ...]
    groups: Tuple[Tuple[int, ...], ...]


def leader_follower_groups(N: int, n_leaders: int) -> List[List[int]]:
    """Agents split into blocks of N/(2·n_leaders); block b belongs to group b mod n_leaders."""
    block = max(1, N // (2 * n_leaders))
    groups: List[List[int]] = [[] for _ in range(n_leaders)]
    for j in range(N):
        groups[(j // block) % n_leaders].append(j)
    return groups


def leader_follower_weight_matrix(N: int, n_leaders: int, seed: int) -> LeaderFollowerGraph:
    """Planted leader-follower network.

    Each group's first agent is its leader. A leader weights its followers uniformly; a follower
    weights its leader by Uniform[0.8, 1] and one random peer of its group by Uniform[0, 0.3].
    """
    groups = leader_follower_groups(N, n_leaders)
    if any(len(g) < 2 for g in groups):
        raise DegreeOutOfRangeError(f"N={N} is too small for {n_leaders} leader groups")
    rng = np.random.default_rng(seed)
    raw = np.zeros((N, N))
    leaders = []
    for members in groups:
        leader, followers = members[0], members[1:]
        leaders.append(leader)
        raw[leader, followers] = 1.0
        for j in followers:
            raw[j, leader] = rng.uniform(0.8, 1.0)
            peers = [k for k in followers if k != j]
            if peers:
                raw[j, peers[rng.integers(len(peers))]] = rng.uniform(0.0, 0.3)
    return LeaderFollowerGraph(
        a=WeightMatrix.from_raw(raw),
        leaders=tuple(leaders),
        groups=tuple(tuple(g) for g in groups),
    )
