"""Shared machinery for experiments: scenario construction, data generation, evaluation and output."""

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, ClassVar, Dict, List, Optional, Sequence, Tuple

import numpy as np

from netkernel.core.basis import BasisSpec
from netkernel.core.config import ExperimentConfig
from netkernel.core.config.experiment import InitConfig
from netkernel.core.diagnostics import EmpiricalMeasure, exploration_measure
from netkernel.core.errors import ConfigError, DimensionMismatchError, NonFiniteStateError
from netkernel.core.estimators import AlsOptions, FitResult, ThreefoldOptions, als_fit, orals_fit
from netkernel.core.estimators.base import RegularizerSpec, regularizer_from_config
from netkernel.core.metrics import graph_error, kernel_error, trajectory_error_stats
from netkernel.core.model import (
    InitialDistribution,
    SystemSpec,
    WeightMatrix,
    circle_weight_matrix,
    leader_follower_weight_matrix,
    sample_weight_matrix,
)
from netkernel.core.presets import KernelPreset, agent_types, basis_preset, kernel_preset
from netkernel.core.simulate import TrajectoryData, add_observation_noise, array_digest, simulate
from netkernel.core.utils.logging import get_logger
from netkernel.core.utils.storage import read_trajectories, write_csv, write_json
from netkernel.globals import DEFAULT_DIRS

logger = get_logger(__name__)

RESULT_COLUMNS = ("algorithm", "M", "run", "graph_err", "kernel_err", "traj_err", "wall_ms")

# Seed purposes for derive_seed
TRAIN, TEST, MEASURE, OBSERVATION, RUN = range(5)


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 32-bit seed for (seed, keys...)."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def run_seed(seed: int, run: int) -> int:
    return derive_seed(seed, RUN, run)


def initial_distribution(cfg: InitConfig) -> InitialDistribution:
    if cfg.kind == "gaussian":
        return InitialDistribution.gaussian(cfg.mean, cfg.std)
    return InitialDistribution.uniform(cfg.lo, cfg.hi)


@dataclass(eq=False)
class Scenario:
    """A true system (graph, kernel, agent types) together with the hypothesis basis used to fit it."""

    spec: SystemSpec
    a: WeightMatrix
    truth: KernelPreset
    basis: BasisSpec
    sigma_obs: float = 0.0
    types: Optional[np.ndarray] = None
    leaders: Optional[tuple] = None
    groups: Optional[tuple] = None

    @property
    def coef(self) -> np.ndarray:
        return self.truth.coefficients_for(self.types)

    def generate(
        self, M: int, seed: int, observe: bool = True, spec: Optional[SystemSpec] = None
    ) -> TrajectoryData:
        """M true trajectories from ``seed``; observation noise is added when ``observe``."""
        spec = (spec or self.spec).replace(seed=derive_seed(seed, TRAIN))
        data = simulate(spec, self.a, self.truth.basis, self.coef, M)
        if observe and self.sigma_obs > 0:
            data = add_observation_noise(data, self.sigma_obs, derive_seed(seed, OBSERVATION))
        return data

    def test_paths(self, M: int, seed: int, spec: Optional[SystemSpec] = None) -> TrajectoryData:
        spec = (spec or self.spec).replace(seed=derive_seed(seed, TEST))
        return simulate(spec, self.a, self.truth.basis, self.coef, M)

    def measure(self, M: int, seed: int) -> EmpiricalMeasure:
        spec = self.spec.replace(seed=derive_seed(seed, MEASURE))
        return exploration_measure(simulate(spec, self.a, self.truth.basis, self.coef, M))


def build_graph(config: ExperimentConfig, seed: int):
    """Weight matrix plus planted leaders and groups when the graph has them."""
    graph, N = config.graph, config.system.N
    graph_seed = graph.seed if graph.seed is not None else seed
    if graph.kind == "random":
        return sample_weight_matrix(N, graph.degree, graph_seed), None, None
    if graph.kind == "circle":
        return circle_weight_matrix(N), None, None
    if graph.kind == "leader_follower":
        planted = leader_follower_weight_matrix(N, graph.n_leaders, graph_seed)
        return planted.a, planted.leaders, planted.groups
    if graph.entries is None:
        raise ConfigError("graph.entries is required for an explicit graph")
    a = WeightMatrix.from_raw(np.asarray(graph.entries, dtype=float))
    if a.N != N:
        raise DimensionMismatchError(f"Explicit graph has N={a.N}, system has N={N}")
    return a, None, None


def build_basis(config: ExperimentConfig) -> BasisSpec:
    if config.basis.spec is not None:
        basis = BasisSpec.from_dict(config.basis.spec)
    elif config.basis.preset is not None:
        basis = basis_preset(config.basis.preset, config.system.d, config.basis.p)
    else:
        raise ConfigError("basis.preset or basis.spec is required")
    if basis.dim_d != config.system.d:
        raise DimensionMismatchError(f"Basis dimension {basis.dim_d} does not match system d={config.system.d}")
    return basis


def build_truth(config: ExperimentConfig, basis: BasisSpec) -> KernelPreset:
    kernel = config.kernel
    if kernel.coefficients is not None:
        coef = np.asarray(kernel.coefficients, dtype=float)
        if coef.shape != (basis.p,):
            raise DimensionMismatchError(f"kernel.coefficients has length {coef.size}, basis has p={basis.p}")
        return KernelPreset("custom", basis, coef)
    if kernel.preset is None:
        raise ConfigError("kernel.preset or kernel.coefficients is required")
    return kernel_preset(kernel.preset, config.system.d, config.basis.p, kernel.seed, kernel.types)


def build_scenario(config: ExperimentConfig, seed: Optional[int] = None, **system_changes: Any) -> Scenario:
    """Assemble the true system described by ``config``; ``system_changes`` override SystemSpec fields."""
    seed = config.seed if seed is None else seed
    system = config.system
    spec = SystemSpec(
        N=system.N,
        d=system.d,
        sigma=system.sigma,
        dt=system.dt,
        L=system.L,
        init=initial_distribution(system.init),
        seed=seed,
    )
    sigma_obs = system_changes.pop("sigma_obs", system.sigma_obs)
    if system_changes:
        spec = spec.replace(**system_changes)
    a, leaders, groups = build_graph(config, seed)
    basis = build_basis(config)
    truth = build_truth(config, basis)
    types = agent_types(system.N, truth.types, config.kernel.seed) if truth.types > 1 else None
    return Scenario(spec, a, truth, basis, sigma_obs, types, leaders, groups)


def prediction_spec(config: ExperimentConfig, scenario: Scenario) -> SystemSpec:
    """The scenario system over the test horizon (data.test_dt, data.test_L) when configured."""
    changes = {}
    if config.data.test_dt is not None:
        changes["dt"] = config.data.test_dt
    if config.data.test_L is not None:
        changes["L"] = config.data.test_L
    return scenario.spec.replace(**changes)


def als_options(config: ExperimentConfig, reg: RegularizerSpec = None) -> AlsOptions:
    est = config.estimation
    chosen = reg if reg is not None else regularizer_from_config(est.regularizer)
    return AlsOptions(
        tol=est.tol,
        max_iter=est.max_iter,
        reg=chosen,
        c0_seed=est.c0_seed,
        c0=None if est.c0 is None else np.asarray(est.c0, dtype=float),
    )


def threefold_options(config: ExperimentConfig) -> ThreefoldOptions:
    est = config.estimation
    return ThreefoldOptions(
        tol=est.tol,
        max_iter=est.max_iter,
        use_kmeans=est.use_kmeans,
        kmeans_mode=est.kmeans_mode,
        seed=config.seed,
        reg=regularizer_from_config(est.regularizer),
    )


def orals_regularizer(config: ExperimentConfig) -> RegularizerSpec:
    return regularizer_from_config(config.estimation.orals_regularizer)


def timed_fit(algorithm: str, data: TrajectoryData, basis: BasisSpec, config: ExperimentConfig, reg=None):
    """(FitResult, wall time in ms) for ``als`` or ``orals``."""
    start = time.perf_counter()
    if algorithm == "als":
        result = als_fit(data, basis, als_options(config, reg))
    elif algorithm == "orals":
        result = orals_fit(data, basis, reg if reg is not None else orals_regularizer(config))
    else:
        raise ConfigError(f"Unknown algorithm '{algorithm}'. Must be one of: ['als', 'orals']")
    return result, 1000.0 * (time.perf_counter() - start)


def prediction_error(
    scenario: Scenario, a_hat: WeightMatrix, c_hat: np.ndarray, test: TrajectoryData
) -> Dict[str, float]:
    """Mean and SD of the relative error of paths predicted from the test initial states with shared noise."""
    try:
        prediction = simulate(test.spec, a_hat, scenario.basis, c_hat, test.M, test.initial_states)
    except NonFiniteStateError as e:
        logger.warning(f"Predicted trajectories blew up: {e.message}")
        return {"traj_err": float("inf"), "traj_err_sd": float("nan")}
    mean, sd = trajectory_error_stats(test, prediction)
    return {"traj_err": mean, "traj_err_sd": sd}


def evaluate_fit(
    scenario: Scenario,
    result: FitResult,
    measure: Optional[EmpiricalMeasure] = None,
    test: Optional[TrajectoryData] = None,
) -> Dict[str, float]:
    """Graph error, kernel error on ``measure`` and trajectory error on ``test`` where available."""
    errors = {"graph_err": graph_error(scenario.a, result.a_hat)}
    if measure is not None:
        errors["kernel_err"] = kernel_error(
            scenario.basis, scenario.coef, result.c_hat, measure, true_basis=scenario.truth.basis
        )
    if test is not None:
        errors.update(prediction_error(scenario, result.a_hat, result.c_hat, test))
    return errors


def quartiles(rows: Sequence[Dict[str, Any]], keys: Sequence[str], value: str) -> List[Dict[str, Any]]:
    """Quartiles of ``value`` grouped by the ``keys`` columns, in first-appearance order."""
    groups: Dict[tuple, List[float]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(float(row[value]))
    table = []
    for group, values in groups.items():
        q1, median, q3 = np.percentile(values, [25, 50, 75])
        table.append({**dict(zip(keys, group)), "metric": value, "q1": q1, "median": median, "q3": q3})
    return table


def median_of(rows: Sequence[Dict[str, Any]], metric: str, **match: Any) -> float:
    """Median of ``metric`` over the rows whose columns equal ``match``; nan when none do."""
    values = [float(row[metric]) for row in rows if all(row[k] == v for k, v in match.items())]
    return float(np.median(values)) if values else float("nan")


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x over finite positive points; nan with fewer than two."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def scaling_slopes(
    rows: Sequence[Dict[str, Any]], x: str, metrics: Sequence[str], group: str = "algorithm", replicate: str = "run"
) -> Dict[str, float]:
    """Median over replicates of the log-log slope of each metric against ``x``, keyed "group/metric"."""
    slopes = {}
    for name in dict.fromkeys(row[group] for row in rows):
        for metric in metrics:
            points: Dict[Any, List[tuple]] = {}
            for row in rows:
                if row[group] == name:
                    points.setdefault(row.get(replicate, 0), []).append((row[x], row[metric]))
            per_replicate = [loglog_slope(*zip(*pts)) for pts in points.values()]
            finite = [s for s in per_replicate if np.isfinite(s)]
            slopes[f"{name}/{metric}"] = float(np.median(finite)) if finite else float("nan")
    return slopes


@dataclass
class ExperimentResult:
    summary: Dict[str, Any]
    artifacts: List[Path] = field(default_factory=list)


class BaseExperiment(ABC):
    """One reproducible experiment driven by an ExperimentConfig."""

    name: ClassVar[str] = ""
    help: ClassVar[str] = ""
    # Config layer applied beneath the user's file
    defaults: ClassVar[Dict[str, Any]] = {}

    def __init__(self, config: ExperimentConfig, out_dir: Optional[Path] = None):
        if not self.name:
            raise ValueError("Experiment name is required in subclass")
        self.config = config
        if out_dir is None:
            out_dir = Path(config.output.dir) if config.output.dir else DEFAULT_DIRS.OUTPUT_DIR / self.name
        self.out_dir = Path(out_dir)
        self.artifacts: List[Path] = []

    @property
    def seed(self) -> int:
        return self.config.seed

    def runs(self, default: int) -> int:
        return self.config.study.runs or default

    def grid(self, values: Optional[Sequence], default: Sequence, label: str) -> List:
        chosen = list(values) if values is not None else list(default)
        if not chosen:
            raise ConfigError(f"{label} must not be empty")
        return chosen

    def training_data(self, scenario: Scenario) -> Tuple[TrajectoryData, bool]:
        """Trajectories from data.input, or simulated from ``scenario``; the flag says whether they match it."""
        source = self.config.data.input
        if not source:
            return scenario.generate(self.config.system.M, self.seed), True
        data = read_trajectories(source)
        matches = data.meta.get("a_hash") == array_digest(scenario.a.entries)
        if not matches:
            logger.warning(f"{source} was not generated from the configured system; skipping error metrics")
        return data, matches

    def write_table(self, filename: str, rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> Path:
        path = write_csv(rows, self.out_dir / filename, columns)
        self.artifacts.append(path)
        return path

    def write_summary(self, summary: Dict[str, Any], filename: str = "summary.json") -> Path:
        path = write_json({"experiment": self.name, "seed": self.seed, **summary}, self.out_dir / filename)
        self.artifacts.append(path)
        return path

    def execute(self) -> ExperimentResult:
        logger.info(f"Running experiment '{self.name}' (seed={self.seed})")
        start = time.perf_counter()
        summary = self.run()
        summary.setdefault("wall_s", time.perf_counter() - start)
        self.write_summary(summary)
        return ExperimentResult(summary={"experiment": self.name, **summary}, artifacts=list(self.artifacts))

    @abstractmethod
    def run(self) -> Dict[str, Any]:
        """Run the experiment, write its tables and return the JSON summary."""
        pass
