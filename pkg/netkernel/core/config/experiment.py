"""Experiment configuration schema and loader.

An experiment file is JSON or YAML. Every section rejects unknown keys.
"""

import json
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from netkernel.core.errors import ConfigError
from netkernel.core.utils.logging import get_logger

logger = get_logger(__name__)

EXPERIMENT_NAMES = (
    "simulate",
    "fit-als",
    "fit-orals",
    "fit-threefold",
    "study-convergence",
    "study-noise",
    "study-regularizers",
    "study-rip",
    "kuramoto",
    "leader-follower",
    "multitype-select",
    "benchmark",
    "typical-run",
    "study-crossover",
    "study-normality",
    "study-coercivity",
    "study-trajectory-bound",
)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class InitConfig(_Section):
    kind: Literal["uniform_box", "gaussian"] = "uniform_box"
    lo: float = 0.0
    hi: float = 1.5
    mean: float = 0.0
    std: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _check_box(self):
        if self.kind == "uniform_box" and not self.lo < self.hi:
            raise ValueError(f"uniform_box needs lo < hi, got [{self.lo}, {self.hi}]")
        return self


class SystemConfig(_Section):
    N: int = Field(default=6, ge=2)
    d: int = Field(default=2, ge=1)
    sigma: float = Field(default=0.0, ge=0)
    sigma_obs: float = Field(default=0.0, ge=0)
    dt: float = Field(default=1e-3, gt=0)
    L: int = Field(default=5, ge=1)
    M: int = Field(default=50, ge=1)
    init: InitConfig = Field(default_factory=InitConfig)


class GraphConfig(_Section):
    kind: Literal["random", "circle", "leader_follower", "explicit"] = "random"
    degree: int = Field(default=2, ge=1)
    seed: Optional[int] = None
    n_leaders: int = Field(default=2, ge=1)
    entries: Optional[List[List[float]]] = None


class BasisConfig(_Section):
    """Either a named preset or an explicit serialised BasisSpec."""

    preset: Optional[str] = "lj3"
    spec: Optional[Dict[str, Any]] = None
    p: Optional[int] = Field(default=None, ge=1)


class KernelConfig(_Section):
    """True kernel: a preset, or explicit coefficients on the configured basis."""

    preset: Optional[str] = "lj"
    coefficients: Optional[List[float]] = None
    seed: int = 0
    types: int = Field(default=1, ge=1, le=2)


class RegularizerConfig(_Section):
    mode: Literal["none", "pinv", "minnorm", "tikhonov_id", "tikhonov_generalized", "dartr"] = "none"
    rcond: float = Field(default=1e-10, gt=0)
    lam: Optional[float] = Field(default=None, ge=0)
    penalty: Optional[List[List[float]]] = None


class EstimationConfig(_Section):
    tol: float = Field(default=1e-6, gt=0)
    max_iter: int = Field(default=10, ge=1)
    c0_seed: int = 0
    c0: Optional[List[float]] = None
    regularizer: Optional[RegularizerConfig] = None
    orals_regularizer: Optional[RegularizerConfig] = None
    Q: int = Field(default=1, ge=1)
    use_kmeans: bool = True
    kmeans_mode: Literal["replace", "labels"] = "replace"
    q_candidates: List[int] = Field(default_factory=lambda: [1, 2])
    alpha: float = 0.8
    beta: float = 0.2


class DataConfig(_Section):
    input: Optional[str] = None
    output: Optional[str] = None
    test_M: int = Field(default=100, ge=1)
    measure_M: int = Field(default=500, ge=1)
    test_L: Optional[int] = Field(default=None, ge=1)
    test_dt: Optional[float] = Field(default=None, gt=0)


class StudyConfig(_Section):
    runs: Optional[int] = Field(default=None, ge=1)
    M_grid: Optional[List[int]] = None
    N_grid: Optional[List[int]] = None
    L_grid: Optional[List[int]] = None
    sigma_grid: Optional[List[float]] = None
    sigma_obs_grid: Optional[List[float]] = None
    sweep: Literal["sigma", "sigma_obs", "both"] = "both"
    regularizers: Optional[List[str]] = None
    n_probe: int = Field(default=2000, ge=100)
    rip_M: int = Field(default=2000, ge=1)
    landscape_grid: int = Field(default=200, ge=3)
    landscape_M: int = Field(default=100, ge=1)
    instances: int = Field(default=20, ge=1)
    n_mc: int = Field(default=1_000_000, ge=1)
    dims: List[int] = Field(default_factory=lambda: [1, 2, 3])
    reps: int = Field(default=200, ge=2)
    paths: int = Field(default=100, ge=1)


class OutputConfig(_Section):
    dir: Optional[str] = None
    write_trajectories: bool = False


class ExperimentConfig(_Section):
    experiment: Literal[EXPERIMENT_NAMES]  # type: ignore[valid-type]
    seed: int = 0
    system: SystemConfig = Field(default_factory=SystemConfig)
    graph: GraphConfig = Field(default_factory=GraphConfig)
    basis: BasisConfig = Field(default_factory=BasisConfig)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    estimation: EstimationConfig = Field(default_factory=EstimationConfig)
    study: StudyConfig = Field(default_factory=StudyConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


def merge_defaults(defaults: Dict[str, Any], raw: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive merge; values in ``raw`` win, nested mappings are merged key by key."""
    merged = dict(defaults)
    for key, value in raw.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_defaults(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_experiment_config(
    raw: Union[Dict[str, Any], None], source: str = "<config>", defaults: Optional[Dict[str, Any]] = None
) -> ExperimentConfig:
    """Validate an already-parsed config mapping, layered over optional per-experiment defaults."""
    if not raw:
        raise ConfigError(f"Configuration {source} is empty", source=source)
    if not isinstance(raw, dict):
        raise ConfigError(f"Configuration {source} must be a mapping, got {type(raw).__name__}", source=source)
    if defaults:
        raw = merge_defaults(defaults, raw)
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        problems = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise ConfigError(f"Invalid configuration {source}: {'; '.join(problems)}", source=source) from e


def read_config_mapping(path: Union[str, Path]) -> Any:
    """Parse a JSON or YAML experiment file without validating it."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read configuration {path}: {e}", source=str(path)) from e

    if not text.strip():
        raise ConfigError(f"Configuration {path} is empty", source=str(path))

    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            raw = yaml.safe_load(text)
        else:
            raw = json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot parse configuration {path}: {e}", source=str(path)) from e

    return raw


def load_experiment_config(
    path: Union[str, Path], defaults: Optional[Callable[[str], Dict[str, Any]]] = None
) -> ExperimentConfig:
    """Read and validate an experiment file; ``defaults`` maps the experiment name to its default layer."""
    path = Path(path)
    raw = read_config_mapping(path)
    layer = defaults(raw.get("experiment")) if defaults is not None and isinstance(raw, dict) else None
    config = parse_experiment_config(raw, str(path), layer)
    logger.debug(f"Loaded {config.experiment} configuration from {path}")
    return config
