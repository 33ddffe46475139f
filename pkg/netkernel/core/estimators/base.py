from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np

from netkernel.core.basis import BasisSpec
from netkernel.core.errors import NonFiniteLossError, RegularizerError
from netkernel.core.linsolve import Regularizer, RegularizerMode
from netkernel.core.model import WeightMatrix
from netkernel.core.simulate import TrajectoryData
from netkernel.core.tensors import FeatureSource, as_features, residual_sum_sq

# Data-adaptive Tikhonov: generalized Tikhonov with the basis Gram matrix as penalty, lambda by L-curve
DARTR = "dartr"

RegularizerSpec = Union[Regularizer, str, None]


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    rel_change_a: float
    rel_change_c: float
    loss: float
    extra: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iteration": self.iteration,
            "rel_change_a": self.rel_change_a,
            "rel_change_c": self.rel_change_c,
            "loss": self.loss,
            **self.extra,
        }


@dataclass(eq=False)
class FitResult:
    a_hat: WeightMatrix
    c_hat: np.ndarray
    history: List[IterationRecord]
    converged: bool
    algorithm: str = ""
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def final_loss(self) -> float:
        return self.history[-1].loss if self.history else float("nan")

    def summary(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "converged": self.converged,
            "iterations": len(self.history),
            "final_loss": self.final_loss,
            "a_hat": self.a_hat.entries.tolist(),
            "degenerate_rows": [i for i, flag in enumerate(self.a_hat.degenerate) if flag],
            "c_hat": np.asarray(self.c_hat).tolist(),
            "history": [record.to_dict() for record in self.history],
            **self.details,
        }


def relative_change(new: np.ndarray, old: Optional[np.ndarray]) -> float:
    """‖new − old‖ / ‖old‖; inf on the first iteration or when old is zero and new is not."""
    if old is None:
        return float("inf")
    diff = float(np.linalg.norm(np.asarray(new) - np.asarray(old)))
    scale = float(np.linalg.norm(old))
    if scale == 0:
        return 0.0 if diff == 0 else float("inf")
    return diff / scale


def loss(data: FeatureSource, basis: Optional[BasisSpec], a: WeightMatrix, c: np.ndarray) -> float:
    """(1/(M·T)) Σ_{m,l} ‖ΔX − a·B(X)·c·Δt‖²_F with T = L·Δt; c may be a (p, N) per-agent matrix."""
    features = as_features(data, basis)
    dt = features.data.dt
    value = residual_sum_sq(features, None, a, c) * dt**2 / (features.M * features.L * dt)
    return check_loss(value)


def check_loss(value: float) -> float:
    if not np.isfinite(value):
        raise NonFiniteLossError(f"Loss is not finite: {value}")
    return float(value)


def block_loss(residual_norm_sq: float, data: TrajectoryData) -> float:
    """Loss from the squared residual of a stacked kernel block (response in ΔX/Δt units)."""
    return check_loss(residual_norm_sq * data.dt / data.M / data.L)


def resolve_regularizer(spec: RegularizerSpec, penalty: Callable[[], np.ndarray]) -> Regularizer:
    """Turn a regularizer choice into a :class:`Regularizer`; ``dartr`` builds its penalty lazily."""
    if spec is None:
        return Regularizer.none()
    if isinstance(spec, Regularizer):
        return spec
    if spec == DARTR:
        return Regularizer.generalized(penalty(), lam=None)
    try:
        return Regularizer(RegularizerMode(spec))
    except ValueError as e:
        raise RegularizerError(f"Unknown regularizer '{spec}'") from e


def regularizer_from_config(cfg) -> RegularizerSpec:
    """Map a RegularizerConfig section to a regularizer choice."""
    if cfg is None:
        return None
    if cfg.mode == DARTR:
        return DARTR
    penalty = np.asarray(cfg.penalty, dtype=float) if cfg.penalty is not None else None
    return Regularizer(RegularizerMode(cfg.mode), rcond=cfg.rcond, lam=cfg.lam, penalty=penalty)


class BaseEstimator(ABC):
    """Joint (graph, kernel) estimator."""

    name: str = ""

    @abstractmethod
    def fit(self, data: TrajectoryData, basis: BasisSpec) -> FitResult:
        """Estimate (a, c) from trajectory data."""
        pass
