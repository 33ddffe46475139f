"""Three-fold ALS for systems with Q kernel types, and model selection over Q.

The per-agent coefficient matrix is cmat = u·vᵀ (p×N) with an orthonormal type factor v (N×Q).
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from netkernel.core.basis import BasisSpec
from netkernel.core.errors import (
    AllRowsDegenerateError,
    ConfigError,
    NonFiniteStateError,
    RankDeficientError,
    RankDeficientVError,
)
from netkernel.core.estimators.base import RegularizerSpec, check_loss, relative_change, resolve_regularizer
from netkernel.core.linsolve import Regularizer, kmeans, nnls, procrustes_orthonormalize, solve_ls
from netkernel.core.metrics import trajectory_error_stats
from netkernel.core.model import SystemSpec, WeightMatrix
from netkernel.core.simulate import TrajectoryData, simulate
from netkernel.core.tensors import (
    PairFeatures,
    assemble_graph_blocks,
    assemble_type_blocks,
    assemble_typed_kernel_block,
    bpsi_matrix,
    residual_sum_sq,
)
from netkernel.core.utils.logging import get_logger
from netkernel.core.utils.parallel import ordered_map

logger = get_logger(__name__)


@dataclass
class ThreefoldOptions:
    tol: float = 1e-6
    max_iter: int = 50
    use_kmeans: bool = True
    kmeans_mode: str = "replace"
    seed: int = 0
    reg: RegularizerSpec = None
    assembly: str = "auto"

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"Invalid tol {self.tol}. Must be > 0")
        if self.max_iter < 1:
            raise ConfigError(f"Invalid max_iter {self.max_iter}. Must be >= 1")
        if self.kmeans_mode not in ("replace", "labels"):
            raise ConfigError(f"Invalid kmeans_mode '{self.kmeans_mode}'. Must be one of: ['replace', 'labels']")


@dataclass(frozen=True)
class ThreefoldRecord:
    iteration: int
    rel_change_a: float
    rel_change_u: float
    rel_change_v: float
    loss: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iteration": self.iteration,
            "rel_change_a": self.rel_change_a,
            "rel_change_u": self.rel_change_u,
            "rel_change_v": self.rel_change_v,
            "loss": self.loss,
        }


@dataclass(eq=False)
class MultitypeFactors:
    a: WeightMatrix
    u: np.ndarray
    v: np.ndarray
    labels: Optional[np.ndarray] = None
    history: List[ThreefoldRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def cmat(self) -> np.ndarray:
        """Per-agent coefficients u·vᵀ; column i drives agent i."""
        return self.u @ self.v.T

    @property
    def Q(self) -> int:
        return self.u.shape[1]

    def summary(self) -> Dict[str, Any]:
        return {
            "Q": self.Q,
            "converged": self.converged,
            "iterations": len(self.history),
            "a_hat": self.a.entries.tolist(),
            "u": self.u.tolist(),
            "v": self.v.tolist(),
            "labels": None if self.labels is None else self.labels.tolist(),
            "history": [record.to_dict() for record in self.history],
        }


def _orthonormal(V: np.ndarray) -> np.ndarray:
    try:
        return procrustes_orthonormalize(V)
    except RankDeficientError as e:
        raise RankDeficientVError(f"Type factor lost full column rank: {e.message}", **e.details) from e


def _apply_gauge(u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Order columns by descending ‖u column‖; make the largest-|entry| of each v column positive."""
    order = np.argsort(-np.linalg.norm(u, axis=0), kind="stable")
    u, v = u[:, order].copy(), v[:, order].copy()
    for q in range(v.shape[1]):
        pivot = int(np.argmax(np.abs(v[:, q])))
        if v[pivot, q] < 0:
            u[:, q], v[:, q] = -u[:, q], -v[:, q]
    return u, v


def _type_labels(v: np.ndarray, seed: int) -> np.ndarray:
    if v.shape[1] == 1:
        return np.zeros(v.shape[0], dtype=int)
    labels, _ = kmeans(v, v.shape[1], seed)
    return labels


def threefold_fit(
    data: TrajectoryData, basis: BasisSpec, Q: int, opts: Optional[ThreefoldOptions] = None
) -> MultitypeFactors:
    """Alternate the graph, coefficient-factor and type-factor steps until all three settle.

    With ``use_kmeans`` the rows of v are clustered into Q groups after each type step; in
    ``replace`` mode each row becomes its centroid before re-orthonormalisation, in ``labels`` mode
    v is left untouched. Type labels always come from clustering the final v.
    """
    opts = opts or ThreefoldOptions()
    N, p = data.N, basis.p
    if not 1 <= Q <= min(p, N):
        raise ConfigError(f"Invalid Q={Q}. Must be in [1, {min(p, N)}]", Q=Q)

    features = PairFeatures(data, basis)
    choice = opts.reg if opts.reg is not None else Regularizer.min_norm()
    reg = resolve_regularizer(choice, lambda: np.kron(bpsi_matrix(features).B, np.eye(Q)))
    type_reg = Regularizer.min_norm()
    rng = np.random.default_rng(opts.seed)
    u = rng.standard_normal((p, Q))
    v = _orthonormal(rng.standard_normal((N, Q)))

    history: List[ThreefoldRecord] = []
    a_prev = None
    a = None
    converged = False
    for iteration in range(1, opts.max_iter + 1):
        u_prev, v_prev = u, v

        blocks = assemble_graph_blocks(features, None, u @ v.T, opts.assembly)
        a = WeightMatrix.from_rows(ordered_map(lambda block: nnls(block.design, block.response), blocks))
        if all(a.degenerate):
            raise AllRowsDegenerateError(f"Every NNLS graph row is zero at iteration {iteration}", iteration=iteration)

        block = assemble_typed_kernel_block(features, None, a, v, opts.assembly)
        u = solve_ls(block.design, block.response, reg, residual_offset=block.residual_sq).reshape(p, Q)

        type_blocks = assemble_type_blocks(features, None, a, u, opts.assembly)
        rows = ordered_map(lambda blk: solve_ls(blk.design, blk.response, type_reg), type_blocks)
        v = _orthonormal(np.vstack(rows))

        if opts.use_kmeans and opts.kmeans_mode == "replace" and Q > 1:
            labels, centroids = kmeans(v, Q, opts.seed)
            try:
                v = _orthonormal(centroids[labels])
            except RankDeficientVError:
                logger.warning(f"Cluster centroids are rank deficient at iteration {iteration}; keeping v")

        cmat = u @ v.T
        current_loss = check_loss(residual_sum_sq(features, None, a, cmat) * data.dt / (data.M * data.L))
        change_a = relative_change(a.entries, None if a_prev is None else a_prev.entries)
        change_u = relative_change(u, u_prev) if iteration > 1 else float("inf")
        change_v = relative_change(v, v_prev) if iteration > 1 else float("inf")
        history.append(ThreefoldRecord(iteration, change_a, change_u, change_v, current_loss))
        logger.debug(
            f"Three-fold ALS iteration {iteration}: da={change_a:.3e} du={change_u:.3e} dv={change_v:.3e} "
            f"loss={current_loss:.6e}"
        )
        a_prev = a
        if max(change_a, change_u, change_v) <= opts.tol:
            converged = True
            break

    u, v = _apply_gauge(u, v)
    labels = _type_labels(v, opts.seed)
    logger.info(f"Three-fold ALS (Q={Q}) finished after {len(history)} iterations (converged={converged})")
    return MultitypeFactors(a=a, u=u, v=v, labels=labels, history=history, converged=converged)


def select_model_order(errors: Dict[int, float], rtol: float = 1e-6) -> int:
    """Smallest Q whose error is within ``rtol`` (relative) of the minimum."""
    finite = {q: e for q, e in errors.items() if np.isfinite(e)}
    if not finite:
        return min(errors)
    best = min(finite.values())
    return min(q for q, e in finite.items() if e <= best * (1 + rtol) + np.finfo(float).tiny)


def _prediction_spec(test: TrajectoryData) -> SystemSpec:
    if test.spec is not None:
        return test.spec
    return SystemSpec(N=test.N, d=test.d, sigma=0.0, dt=test.dt, L=test.L)


def model_select(
    data_train: TrajectoryData,
    data_test: TrajectoryData,
    basis: BasisSpec,
    Q_candidates: Sequence[int],
    opts: Optional[ThreefoldOptions] = None,
    horizon: Optional[Tuple[float, int]] = None,
) -> Tuple[int, List[Dict[str, Any]]]:
    """Fit every candidate Q on the training data and pick the best trajectory predictor.

    Predictions start from the test initial states and reuse the test noise seed, so true and
    predicted paths share their Brownian increments.
    """
    if not Q_candidates:
        raise ConfigError("Q_candidates must not be empty")
    spec = _prediction_spec(data_test)
    if horizon is not None:
        spec = spec.replace(dt=horizon[0], L=horizon[1])
        if (spec.dt, spec.L) != (data_test.dt, data_test.L):
            raise ConfigError(f"Horizon {horizon} does not match the test data (dt={data_test.dt}, L={data_test.L})")

    table = []
    errors: Dict[int, float] = {}
    for Q in sorted(set(Q_candidates)):
        factors = threefold_fit(data_train, basis, Q, opts)
        try:
            prediction = simulate(spec, factors.a, basis, factors.cmat, data_test.M, data_test.initial_states)
            mean, sd = trajectory_error_stats(data_test.states, prediction.states)
        except NonFiniteStateError as e:
            logger.warning(f"Prediction with Q={Q} blew up: {e.message}")
            mean, sd = float("inf"), float("nan")
        errors[Q] = mean
        table.append({"Q": Q, "traj_err_mean": mean, "traj_err_sd": sd, "converged": factors.converged})
        logger.info(f"Model Q={Q}: trajectory error {mean:.3e} ± {sd:.3e}")

    best = select_model_order(errors)
    return best, table
