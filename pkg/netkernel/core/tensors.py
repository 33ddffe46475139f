"""Basis tensors, increments and the regression blocks consumed by the estimators.

Row orderings are fixed: graph, sensing and type blocks stack rows over (m, l, dim); kernel blocks
over (m, l, i, dim). Graph and sensing columns skip j = i in ascending j; sensing unknowns are
j-major, k-minor.

A block is either *long* (the stacked design and response) or *compressed*: the triangular factor R
and y = Qᵀb of a streaming QR of [design | response], with ‖Ax − b‖² = ‖Rx − y‖² + residual_sq.
Compressed blocks share the minimisers of the long problem for every solver in linsolve.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from netkernel.core.basis import BasisSpec
from netkernel.core.errors import ConfigError, DimensionMismatchError, ZeroCoefficientError
from netkernel.core.model import WeightMatrix, pairwise_diffs
from netkernel.core.simulate import TrajectoryData
from netkernel.core.utils.logging import get_logger
from netkernel.core.utils.parallel import chunk_ranges, ordered_map, resolve_threads
from netkernel.globals import Config

logger = get_logger(__name__)

ASSEMBLY_MODES = ("auto", "long", "compressed")

Array = np.ndarray


@dataclass(frozen=True, eq=False)
class BasisTensor:
    """values[j, i, dim, k] = ψ_k(X^j − X^i); the j = i slices are zero."""

    values: Array

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[-1]


@dataclass(frozen=True, eq=False)
class BpsiMatrix:
    B: Array

    @property
    def p(self) -> int:
        return self.B.shape[0]


@dataclass(frozen=True, eq=False)
class RegressionBlock:
    design: Array
    response: Array
    n_rows: int
    n_trajectories: int
    row_index_map: str
    compressed: bool = False
    residual_sq: float = 0.0

    @property
    def n_cols(self) -> int:
        return self.design.shape[1]

    @cached_property
    def normal(self) -> Tuple[Array, Array]:
        """(designᵀdesign / rows, designᵀresponse / rows) of the long problem."""
        rows = max(self.n_rows, 1)
        return self.design.T @ self.design / rows, self.design.T @ self.response / rows

    def residual_norm_sq(self, x: Array) -> float:
        """‖Ax − b‖² of the long problem."""
        r = self.design @ x - self.response
        return float(r @ r + self.residual_sq)


def _pair_features(basis: BasisSpec, X: Array) -> Array:
    """F[..., i, j, dim, k] = ψ_k(X^j − X^i) with F[..., i, i, :, :] = 0."""
    F = basis.evaluate(pairwise_diffs(X))
    idx = np.arange(X.shape[-2])
    F[..., idx, idx, :, :] = 0.0
    return F


def build_basis_tensor(basis: BasisSpec, X: Array) -> BasisTensor:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != basis.dim_d:
        raise DimensionMismatchError(f"Expected a state of shape (N, {basis.dim_d}), got {X.shape}")
    return BasisTensor(np.ascontiguousarray(_pair_features(basis, X).transpose(1, 0, 2, 3)))


def increments(data: TrajectoryData) -> Array:
    """(X_{l+1} − X_l) / dt, shape (M, L, N, d)."""
    return np.diff(data.states, axis=1) / data.dt


class PairFeatures:
    """Chunked access to pair features and increments of a dataset.

    Chunks hold ``Config.CHUNK_TRAJECTORIES`` trajectories so reductions follow one fixed order
    whatever the worker count. Feature chunks are cached when the full tensor fits in
    ``Config.FEATURE_CACHE_MB``.
    """

    def __init__(self, data: TrajectoryData, basis: BasisSpec, chunk: Optional[int] = None):
        if data.d != basis.dim_d:
            raise DimensionMismatchError(f"Data dimension {data.d} does not match basis dimension {basis.dim_d}")
        self.data = data
        self.basis = basis
        self.chunks = chunk_ranges(data.M, chunk or Config.CHUNK_TRAJECTORIES)
        size_mb = data.M * data.L * data.N * data.N * data.d * basis.p * 8 / 2**20
        self.cached = size_mb <= Config.FEATURE_CACHE_MB
        self._cache: Dict[int, Tuple[Array, Array]] = {}
        logger.debug(f"Pair features: {len(self.chunks)} chunks, {size_mb:.1f} MB, cached={self.cached}")

    @property
    def M(self) -> int:
        return self.data.M

    @property
    def L(self) -> int:
        return self.data.L

    @property
    def N(self) -> int:
        return self.data.N

    @property
    def d(self) -> int:
        return self.data.d

    @property
    def p(self) -> int:
        return self.basis.p

    def chunk(self, index: int) -> Tuple[Array, Array]:
        """(F, V) for chunk ``index``: F of shape (B, L, N, N, d, p), V the increments (B, L, N, d)."""
        if index in self._cache:
            return self._cache[index]
        trajectories = self.chunks[index]
        states = self.data.states[trajectories.start : trajectories.stop]
        F = _pair_features(self.basis, states[:, :-1])
        V = np.diff(states, axis=1) / self.data.dt
        if self.cached:
            self._cache[index] = (F, V)
        return F, V

    def sweep(self, fn: Callable[[Array, Array], object], consume: Callable[[object], None]) -> None:
        """Apply ``fn`` to every chunk in parallel windows and ``consume`` results in chunk order."""
        threads = resolve_threads()
        for window in chunk_ranges(len(self.chunks), threads):
            for payload in ordered_map(lambda k: fn(*self.chunk(k)), window, threads):
                consume(payload)


FeatureSource = Union[TrajectoryData, PairFeatures]


def as_features(data: FeatureSource, basis: Optional[BasisSpec] = None) -> PairFeatures:
    if isinstance(data, PairFeatures):
        return data
    if basis is None:
        raise DimensionMismatchError("A basis is required to assemble features from trajectory data")
    return PairFeatures(data, basis)


class _QRAccumulator:
    """Streaming QR of [A | b], merged in arrival order."""

    def __init__(self, n_cols: int):
        self.n = n_cols
        self.R = np.zeros((0, n_cols + 1))
        self.buffer: List[Array] = []
        self.buffered = 0
        self.flush_rows = max(4 * (n_cols + 1), 1024)

    def add(self, A: Array, b: Array) -> None:
        self.buffer.append(np.column_stack([A, b]))
        self.buffered += A.shape[0]
        if self.buffered >= self.flush_rows:
            self._flush()

    def _flush(self) -> None:
        if not self.buffer:
            return
        self.R = np.linalg.qr(np.vstack([self.R] + self.buffer), mode="r")
        self.buffer, self.buffered = [], 0

    def result(self) -> Tuple[Array, Array, float]:
        self._flush()
        n = self.n
        R = np.zeros((n + 1, n + 1))
        R[: self.R.shape[0]] = self.R[: n + 1]
        return R[:n, :n].copy(), R[:n, n].copy(), float(R[n, n] ** 2)


class _BlockBuilder:
    def __init__(self, n_cols: int, total_rows: int, mode: str, row_index_map: str):
        if mode not in ASSEMBLY_MODES:
            raise ConfigError(f"Invalid assembly mode '{mode}'. Must be one of: {list(ASSEMBLY_MODES)}")
        self.compressed = mode == "compressed" or (mode == "auto" and total_rows > n_cols)
        self.n_cols = n_cols
        self.row_index_map = row_index_map
        self.rows = 0
        self._designs: List[Array] = []
        self._responses: List[Array] = []
        self._qr = _QRAccumulator(n_cols) if self.compressed else None

    def add(self, design: Array, response: Array) -> None:
        self.rows += design.shape[0]
        if self._qr is not None:
            self._qr.add(design, response)
        else:
            self._designs.append(design)
            self._responses.append(response)

    def finish(self, n_trajectories: int) -> RegressionBlock:
        if self._qr is not None:
            R, y, s2 = self._qr.result()
            return RegressionBlock(R, y, self.rows, n_trajectories, self.row_index_map, True, s2)
        design = np.vstack(self._designs) if self._designs else np.zeros((0, self.n_cols))
        response = np.concatenate(self._responses) if self._responses else np.zeros(0)
        return RegressionBlock(design, response, self.rows, n_trajectories, self.row_index_map)


def _others(N: int, i: int) -> Array:
    return np.delete(np.arange(N), i)


def _kernel_values(F: Array, c: Array) -> Array:
    """P[..., i, j, dim] = Φ(r_ij) with coefficient vector c, or column i of a (p, N) matrix."""
    if c.ndim == 1:
        return (F * c).sum(axis=-1)
    return (F * c.T[:, None, None, :]).sum(axis=-1)


def _check_coef(c: Array, p: int, N: int) -> Array:
    c = np.asarray(c, dtype=float)
    if c.shape[0] != p or (c.ndim == 2 and c.shape[1] != N) or c.ndim > 2:
        raise DimensionMismatchError(f"Coefficients of shape {c.shape} do not match p={p}, N={N}")
    if np.linalg.norm(c) == 0:
        raise ZeroCoefficientError("Graph blocks need a nonzero kernel coefficient")
    return c


def assemble_graph_blocks(
    data: FeatureSource, basis: Optional[BasisSpec], c: Array, mode: str = "auto"
) -> List[RegressionBlock]:
    """Graph-row blocks for every agent in one pass over the data."""
    features = as_features(data, basis)
    N, d, L, M = features.N, features.d, features.L, features.M
    c = _check_coef(c, features.p, N)
    builders = [_BlockBuilder(N - 1, M * L * d, mode, "rows (m, l, dim); columns j != i ascending") for _ in range(N)]

    def rows(F, V):
        P = _kernel_values(F, c)
        out = []
        for i in range(N):
            design = P[:, :, i][:, :, _others(N, i)].transpose(0, 1, 3, 2)
            out.append((design.reshape(-1, N - 1), V[:, :, i].reshape(-1)))
        return out

    def consume(payload):
        for builder, (design, response) in zip(builders, payload):
            builder.add(design, response)

    features.sweep(rows, consume)
    return [builder.finish(M) for builder in builders]


def assemble_graph_block(
    i: int, data: FeatureSource, basis: Optional[BasisSpec], c: Array, mode: str = "auto"
) -> RegressionBlock:
    """Design column j is Φ_c(X^j − X^i) over rows (m, l, dim); response is (ΔX)_i / Δt."""
    features = as_features(data, basis)
    N = features.N
    c = _check_coef(c, features.p, N)
    builder = _BlockBuilder(N - 1, features.M * features.L * features.d, mode, "rows (m, l, dim); columns j != i")
    others = _others(N, i)

    def rows(F, V):
        P = _kernel_values(F[:, :, i : i + 1], c if c.ndim == 1 else c[:, i : i + 1])[:, :, 0]
        return P[:, :, others].transpose(0, 1, 3, 2).reshape(-1, N - 1), V[:, :, i].reshape(-1)

    features.sweep(rows, lambda payload: builder.add(*payload))
    return builder.finish(features.M)


def _weighted_features(F: Array, a: WeightMatrix) -> Array:
    """G[..., i, dim, k] = Σ_{j≠i} a_ij ψ_k(r_ij)."""
    return (a.entries[:, :, None, None] * F).sum(axis=3)


def assemble_kernel_block(
    data: FeatureSource, basis: Optional[BasisSpec], a: WeightMatrix, mode: str = "auto"
) -> RegressionBlock:
    """Design row (m, l, i, dim) is Σ_{j≠i} a_ij ψ_k(r_ij) over k; response the stacked increments."""
    features = as_features(data, basis)
    if a.N != features.N:
        raise DimensionMismatchError(f"Weight matrix has N={a.N}, data has N={features.N}")
    p = features.p
    builder = _BlockBuilder(p, features.M * features.L * features.N * features.d, mode, "rows (m, l, i, dim)")

    def rows(F, V):
        return _weighted_features(F, a).reshape(-1, p), V.reshape(-1)

    features.sweep(rows, lambda payload: builder.add(*payload))
    return builder.finish(features.M)


def assemble_typed_kernel_block(
    data: FeatureSource, basis: Optional[BasisSpec], a: WeightMatrix, v: Array, mode: str = "auto"
) -> RegressionBlock:
    """Kernel block for cmat = u·vᵀ with v fixed: columns (k, q) hold v_iq Σ_j a_ij ψ_k(r_ij), k-major."""
    features = as_features(data, basis)
    p, Q = features.p, v.shape[1]
    builder = _BlockBuilder(p * Q, features.M * features.L * features.N * features.d, mode, "rows (m, l, i, dim)")

    def rows(F, V):
        G = _weighted_features(F, a)
        H = G[..., :, None] * v[:, None, None, :]
        return H.reshape(-1, p * Q), V.reshape(-1)

    features.sweep(rows, lambda payload: builder.add(*payload))
    return builder.finish(features.M)


def assemble_type_blocks(
    data: FeatureSource, basis: Optional[BasisSpec], a: WeightMatrix, u: Array, mode: str = "auto"
) -> List[RegressionBlock]:
    """Per-agent blocks for row v_i: design (Σ_j a_ij ψ(r_ij))·u over rows (m, l, dim)."""
    features = as_features(data, basis)
    N, Q = features.N, u.shape[1]
    builders = [_BlockBuilder(Q, features.M * features.L * features.d, mode, "rows (m, l, dim)") for _ in range(N)]

    def rows(F, V):
        G = _weighted_features(F, a) @ u
        return [(G[:, :, i].reshape(-1, Q), V[:, :, i].reshape(-1)) for i in range(N)]

    def consume(payload):
        for builder, (design, response) in zip(builders, payload):
            builder.add(design, response)

    features.sweep(rows, consume)
    return [builder.finish(features.M) for builder in builders]


def _sensing_rows(F: Array, i: int) -> Array:
    N, p = F.shape[2], F.shape[-1]
    S = F[:, :, i][:, :, _others(N, i)].transpose(0, 1, 3, 2, 4)
    return S.reshape(-1, (N - 1) * p)


def assemble_sensing_blocks(
    data: FeatureSource, basis: Optional[BasisSpec] = None, mode: str = "auto"
) -> List[RegressionBlock]:
    """Sensing blocks for every agent in one pass over the data."""
    features = as_features(data, basis)
    N, p = features.N, features.p
    builders = [
        _BlockBuilder((N - 1) * p, features.M * features.L * features.d, mode, "rows (m, l, dim); columns (j, k)")
        for _ in range(N)
    ]

    def rows(F, V):
        return [(_sensing_rows(F, i), V[:, :, i].reshape(-1)) for i in range(N)]

    def consume(payload):
        for builder, (design, response) in zip(builders, payload):
            builder.add(design, response)

    features.sweep(rows, consume)
    return [builder.finish(features.M) for builder in builders]


def assemble_sensing_block(
    i: int, data: FeatureSource, basis: Optional[BasisSpec] = None, mode: str = "auto"
) -> RegressionBlock:
    """Design for z_i = vec(a_iᵀcᵀ), unknowns ordered (a_i1 c_1, …, a_i1 c_p, a_i2 c_1, …), j skipping i."""
    features = as_features(data, basis)
    N, p = features.N, features.p
    builder = _BlockBuilder((N - 1) * p, features.M * features.L * features.d, mode, "rows (m, l, dim); columns (j, k)")
    features.sweep(lambda F, V: (_sensing_rows(F, i), V[:, :, i].reshape(-1)), lambda payload: builder.add(*payload))
    return builder.finish(features.M)


def bpsi_matrix(data: FeatureSource, basis: Optional[BasisSpec] = None) -> BpsiMatrix:
    """B[k, k'] = mean over (m, l, i ≠ j) of ⟨ψ_k(r_ij), ψ_k'(r_ij)⟩."""
    features = as_features(data, basis)
    p = features.p
    total = np.zeros((p, p))

    def partial(F, V):
        rows = F.reshape(-1, p)
        return rows.T @ rows

    def consume(block):
        nonlocal total
        total = total + block

    features.sweep(partial, consume)
    B = total / ((features.N - 1) * features.N * features.L * features.M)
    return BpsiMatrix(0.5 * (B + B.T))


def residual_sum_sq(data: FeatureSource, basis: Optional[BasisSpec], a: WeightMatrix, c: Array) -> float:
    """Σ_{m,l} ‖ΔX/Δt − a·B·c‖²_F; c may be a vector or a (p, N) per-agent matrix."""
    features = as_features(data, basis)
    c = np.asarray(c, dtype=float)
    total = 0.0

    def partial(F, V):
        pred = (a.entries[:, :, None] * _kernel_values(F, c)).sum(axis=3)
        r = V - pred
        return float(np.sum(r * r))

    def consume(value):
        nonlocal total
        total += value

    features.sweep(partial, consume)
    return total
