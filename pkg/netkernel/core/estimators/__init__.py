from typing import Dict, Type

from netkernel.core.errors import ConfigError
from netkernel.core.estimators.als import AlsEstimator, AlsOptions, als_fit
from netkernel.core.estimators.base import DARTR, BaseEstimator, FitResult, IterationRecord, loss
from netkernel.core.estimators.multitype import (
    MultitypeFactors,
    ThreefoldOptions,
    model_select,
    select_model_order,
    threefold_fit,
)
from netkernel.core.estimators.orals import (
    OralsEstimator,
    ZEstimates,
    deterministic_als,
    normality_harness,
    operator_regression,
    orals_fit,
)
from netkernel.core.utils.logging import get_logger

logger = get_logger(__name__)

# Joint (a, c) estimators selectable by name
AVAILABLE_ESTIMATORS: Dict[str, Type[BaseEstimator]] = {
    AlsEstimator.name: AlsEstimator,
    OralsEstimator.name: OralsEstimator,
}


def get_available_estimators() -> Dict[str, Type[BaseEstimator]]:
    return AVAILABLE_ESTIMATORS.copy()


def get_estimator(name: str) -> Type[BaseEstimator]:
    """Get an estimator class by name."""
    if name not in AVAILABLE_ESTIMATORS:
        raise ConfigError(
            f"Estimator '{name}' not found. Available estimators: {list(AVAILABLE_ESTIMATORS.keys())}", name=name
        )
    return AVAILABLE_ESTIMATORS[name]


__all__ = [
    "AVAILABLE_ESTIMATORS",
    "DARTR",
    "AlsEstimator",
    "AlsOptions",
    "BaseEstimator",
    "FitResult",
    "IterationRecord",
    "MultitypeFactors",
    "OralsEstimator",
    "ThreefoldOptions",
    "ZEstimates",
    "als_fit",
    "deterministic_als",
    "get_available_estimators",
    "get_estimator",
    "loss",
    "model_select",
    "normality_harness",
    "operator_regression",
    "orals_fit",
    "select_model_order",
    "threefold_fit",
]
