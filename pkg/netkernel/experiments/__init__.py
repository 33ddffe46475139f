from typing import Any, Dict, Type

from netkernel.core.config import EXPERIMENT_NAMES
from netkernel.core.errors import UnknownExperimentError
from netkernel.core.utils.logging import get_logger
from netkernel.experiments.applications import KuramotoStudy, LeaderFollowerStudy, MultitypeSelection
from netkernel.experiments.base import BaseExperiment, ExperimentResult, Scenario, build_scenario
from netkernel.experiments.fitting import (
    FitAlsExperiment,
    FitOralsExperiment,
    FitThreefoldExperiment,
    SimulateExperiment,
    TypicalRunExperiment,
)
from netkernel.experiments.studies import (
    Benchmark,
    ConvergenceStudy,
    CrossoverStudy,
    NoiseStudy,
    RegularizerStudy,
)
from netkernel.experiments.wellposedness import (
    CoercivityStudy,
    NormalityStudy,
    RipStudy,
    TrajectoryBoundStudy,
)

logger = get_logger(__name__)

# Experiment classes keyed by the ExperimentConfig.experiment value
AVAILABLE_EXPERIMENTS: Dict[str, Type[BaseExperiment]] = {
    cls.name: cls
    for cls in (
        SimulateExperiment,
        FitAlsExperiment,
        FitOralsExperiment,
        FitThreefoldExperiment,
        ConvergenceStudy,
        NoiseStudy,
        RegularizerStudy,
        RipStudy,
        KuramotoStudy,
        LeaderFollowerStudy,
        MultitypeSelection,
        Benchmark,
        TypicalRunExperiment,
        CrossoverStudy,
        NormalityStudy,
        CoercivityStudy,
        TrajectoryBoundStudy,
    )
}

_missing = set(EXPERIMENT_NAMES) - set(AVAILABLE_EXPERIMENTS)
if _missing:
    logger.warning(f"Experiments without an implementation: {sorted(_missing)}")


def get_available_experiments() -> Dict[str, Type[BaseExperiment]]:
    """Get dictionary of available experiments."""
    return AVAILABLE_EXPERIMENTS.copy()


def get_experiment(name: str) -> Type[BaseExperiment]:
    """Get an experiment class by name."""
    if name not in AVAILABLE_EXPERIMENTS:
        raise UnknownExperimentError(
            f"Experiment '{name}' not found. Available experiments: {list(AVAILABLE_EXPERIMENTS.keys())}", name=name
        )
    return AVAILABLE_EXPERIMENTS[name]


def experiment_defaults(name: Any) -> Dict[str, Any]:
    """Default config layer of ``name``; empty for unknown names so validation reports them."""
    cls = AVAILABLE_EXPERIMENTS.get(name) if isinstance(name, str) else None
    return dict(cls.defaults) if cls is not None else {}


__all__ = [
    "AVAILABLE_EXPERIMENTS",
    "BaseExperiment",
    "ExperimentResult",
    "Scenario",
    "build_scenario",
    "experiment_defaults",
    "get_available_experiments",
    "get_experiment",
]
