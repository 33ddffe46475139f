"""Alternating least squares over (a, c)."""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from netkernel.core.basis import BasisSpec
from netkernel.core.errors import AllRowsDegenerateError, ConfigError, DimensionMismatchError
from netkernel.core.estimators.base import (
    BaseEstimator,
    FitResult,
    IterationRecord,
    RegularizerSpec,
    block_loss,
    loss,
    relative_change,
    resolve_regularizer,
)
from netkernel.core.linsolve import nnls, solve_ls
from netkernel.core.model import WeightMatrix
from netkernel.core.simulate import TrajectoryData
from netkernel.core.tensors import PairFeatures, assemble_graph_blocks, assemble_kernel_block, bpsi_matrix
from netkernel.core.utils.logging import get_logger
from netkernel.core.utils.parallel import ordered_map

logger = get_logger(__name__)

__all__ = ["AlsEstimator", "AlsOptions", "als_fit", "graph_step", "initial_coefficients", "loss"]


@dataclass
class AlsOptions:
    """Options for :func:`als_fit`."""

    tol: float = 1e-6
    max_iter: int = 10
    reg: RegularizerSpec = None
    c0_seed: int = 0
    c0: Optional[np.ndarray] = None
    assembly: str = "auto"

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"Invalid tol {self.tol}. Must be > 0")
        if self.max_iter < 1:
            raise ConfigError(f"Invalid max_iter {self.max_iter}. Must be >= 1")


def initial_coefficients(p: int, seed: int, c0: Optional[np.ndarray] = None) -> np.ndarray:
    """``c0`` when given, else a seeded unit Gaussian vector."""
    if c0 is not None:
        c0 = np.asarray(c0, dtype=float)
        if c0.shape != (p,):
            raise DimensionMismatchError(f"c0 has shape {c0.shape}, expected ({p},)")
        return c0
    c = np.random.default_rng(seed).standard_normal(p)
    return c / np.linalg.norm(c)


def graph_step(features: PairFeatures, c: np.ndarray, assembly: str = "auto") -> WeightMatrix:
    """Per-row NNLS against Φ_c followed by row ℓ²-normalisation; zero rows stay zero and are flagged."""
    blocks = assemble_graph_blocks(features, None, c, assembly)
    rows: List[np.ndarray] = ordered_map(lambda block: nnls(block.design, block.response), blocks)
    return WeightMatrix.from_rows(rows)


def als_fit(data: TrajectoryData, basis: BasisSpec, opts: Optional[AlsOptions] = None) -> FitResult:
    """Alternate the NNLS graph step and the least-squares kernel step.

    Stops when the relative changes of both a and c are at most ``opts.tol`` or after
    ``opts.max_iter`` iterations. The loss recorded each iteration is evaluated at the current pair.
    """
    opts = opts or AlsOptions()
    features = PairFeatures(data, basis)
    reg = resolve_regularizer(opts.reg, lambda: bpsi_matrix(features).B)
    c = initial_coefficients(basis.p, opts.c0_seed, opts.c0)

    history: List[IterationRecord] = []
    a_prev: Optional[WeightMatrix] = None
    a = None
    converged = False
    for iteration in range(1, opts.max_iter + 1):
        a = graph_step(features, c, opts.assembly)
        if all(a.degenerate) and iteration == 1 and opts.c0 is None:
            logger.warning("Every NNLS row vanished for the random c0; retrying with -c0")
            c = -c
            a = graph_step(features, c, opts.assembly)
        if all(a.degenerate):
            raise AllRowsDegenerateError(f"Every NNLS graph row is zero at iteration {iteration}", iteration=iteration)
        if a.any_degenerate:
            flagged = [i for i, flag in enumerate(a.degenerate) if flag]
            logger.warning(f"Degenerate graph rows at iteration {iteration}: {flagged}")

        block = assemble_kernel_block(features, None, a, opts.assembly)
        c_new = solve_ls(block.design, block.response, reg, residual_offset=block.residual_sq)
        current_loss = block_loss(block.residual_norm_sq(c_new), data)

        change_a = relative_change(a.entries, None if a_prev is None else a_prev.entries)
        change_c = relative_change(c_new, c)
        history.append(IterationRecord(iteration, change_a, change_c, current_loss))
        logger.debug(f"ALS iteration {iteration}: da={change_a:.3e} dc={change_c:.3e} loss={current_loss:.6e}")

        a_prev, c = a, c_new
        if change_a <= opts.tol and change_c <= opts.tol:
            converged = True
            break

    logger.info(f"ALS finished after {len(history)} iterations (converged={converged}, loss={history[-1].loss:.3e})")
    return FitResult(a_hat=a, c_hat=c, history=history, converged=converged, algorithm="als")


class AlsEstimator(BaseEstimator):
    name = "als"

    def __init__(self, opts: Optional[AlsOptions] = None):
        self.opts = opts or AlsOptions()

    def fit(self, data: TrajectoryData, basis: BasisSpec) -> FitResult:
        return als_fit(data, basis, self.opts)
