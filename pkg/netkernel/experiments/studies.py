"""Repeated-run studies: convergence in M, noise decay, regularisers, small/large-sample crossover and timing."""

from typing import Any, Dict, List

import numpy as np

from netkernel.core.errors import ConfigError
from netkernel.core.utils.logging import get_logger
from netkernel.experiments.base import (
    RESULT_COLUMNS,
    BaseExperiment,
    build_scenario,
    evaluate_fit,
    median_of,
    prediction_spec,
    quartiles,
    run_seed,
    scaling_slopes,
    timed_fit,
)

logger = get_logger(__name__)

ALGORITHMS = ("als", "orals")
ERROR_METRICS = ("graph_err", "kernel_err")
QUARTILE_COLUMNS = ("algorithm", "M", "metric", "q1", "median", "q3")

LJ_SYSTEM = {"N": 6, "d": 2, "dt": 1e-4, "init": {"kind": "uniform_box", "lo": 0.0, "hi": 1.5}}

RANDOM_FOURIER = {
    "system": {"d": 1, "L": 2, "dt": 1e-3, "init": {"kind": "uniform_box", "lo": 0.0, "hi": 1.0}},
    "basis": {"preset": "random_fourier"},
    "kernel": {"preset": "random_fourier"},
}


class ConvergenceStudy(BaseExperiment):
    """Errors of both estimators over an increasing sample size, with quartiles and log-log slopes.

    Each run draws a new graph and one dataset of the largest M; smaller sizes use its leading
    trajectories.
    """

    name = "study-convergence"
    help = "Graph, kernel and trajectory errors of ALS and ORALS as M grows"
    defaults = {
        "system": {**LJ_SYSTEM, "sigma": 1e-2, "sigma_obs": 0.0, "L": 5},
        "graph": {"kind": "random", "degree": 2},
        "basis": {"preset": "lj3"},
        "kernel": {"preset": "lj"},
    }
    M_GRID = (10, 24, 59, 146, 359, 879, 2154, 5274, 12915, 31622)
    RUNS = 20

    def run(self) -> Dict[str, Any]:
        M_grid = sorted(self.grid(self.config.study.M_grid, self.M_GRID, "study.M_grid"))
        runs = self.runs(self.RUNS)
        rows: List[Dict[str, Any]] = []
        for r in range(runs):
            seed = run_seed(self.seed, r)
            scenario = build_scenario(self.config, seed)
            full = scenario.generate(M_grid[-1], seed)
            measure = scenario.measure(self.config.data.measure_M, seed)
            test = scenario.test_paths(self.config.data.test_M, seed, prediction_spec(self.config, scenario))
            for M in M_grid:
                data = full.subset(range(M))
                for algorithm in ALGORITHMS:
                    result, wall_ms = timed_fit(algorithm, data, scenario.basis, self.config)
                    errors = evaluate_fit(scenario, result, measure, test)
                    rows.append({"algorithm": algorithm, "M": M, "run": r, "wall_ms": wall_ms, **errors})
            logger.info(f"Convergence run {r + 1}/{runs} finished")

        self.write_table("results.csv", rows, RESULT_COLUMNS)
        table = [q for metric in ERROR_METRICS + ("traj_err",) for q in quartiles(rows, ("algorithm", "M"), metric)]
        self.write_table("quartiles.csv", table, QUARTILE_COLUMNS)
        return {"M_grid": M_grid, "runs": runs, "slopes": scaling_slopes(rows, "M", ERROR_METRICS)}


class NoiseStudy(BaseExperiment):
    """Error decay in the stochastic force σ (σ_obs tiny) and in the observation noise σ_obs (σ = 0).

    The σ sweep runs on the configured system. The σ_obs sweep runs on ``SWEEP_SYSTEMS["sigma_obs"]``,
    which replaces the configured σ, dt and L. Observation noise enters both the response and the
    design, so the error picks up a bias quadratic in σ_obs whose share grows with the sample count;
    the σ_obs levels default to a grid below the range where that bias overtakes the linear term.
    """

    name = "study-noise"
    help = "Errors of ALS and ORALS against the stochastic force and the observation noise level"
    defaults = {
        "system": {**LJ_SYSTEM, "L": 10, "M": 1000},
        "graph": {"kind": "random", "degree": 2},
        "basis": {"preset": "lj3"},
        "kernel": {"preset": "lj"},
        "estimation": {"tol": 1e-10},
    }
    LEVELS = {"sigma": (1e-4, 1e-3, 1e-2, 1e-1), "sigma_obs": (1e-6, 1e-5, 1e-4, 1e-3)}
    SWEEP_SYSTEMS = {"sigma": {}, "sigma_obs": {"sigma": 0.0, "dt": 1e-4, "L": 10}}
    SIGMA_OBS_FLOOR = 1e-7
    RUNS = 10
    COLUMNS = ("sweep", "level", "algorithm", "M", "run", "dt", "L", "graph_err", "kernel_err", "wall_ms")

    def sweeps(self) -> Dict[str, List[float]]:
        study = self.config.study
        chosen = ("sigma", "sigma_obs") if study.sweep == "both" else (study.sweep,)
        grids = {
            "sigma": self.grid(study.sigma_grid, self.LEVELS["sigma"], "study.sigma_grid"),
            "sigma_obs": self.grid(study.sigma_obs_grid, self.LEVELS["sigma_obs"], "study.sigma_obs_grid"),
        }
        for sweep in chosen:
            if any(level <= 0 for level in grids[sweep]):
                raise ConfigError(f"study.{sweep}_grid levels must be > 0 for a log-log fit")
        return {sweep: grids[sweep] for sweep in chosen}

    def sweep_changes(self, sweep: str, level: float) -> Dict[str, Any]:
        """SystemSpec changes for one grid point of ``sweep``."""
        if sweep == "sigma":
            changes = {"sigma": level, "sigma_obs": self.SIGMA_OBS_FLOOR}
        else:
            changes = {"sigma_obs": level}
        return {**self.SWEEP_SYSTEMS[sweep], **changes}

    def run(self) -> Dict[str, Any]:
        M = self.config.system.M
        runs = self.runs(self.RUNS)
        rows: List[Dict[str, Any]] = []
        for sweep, levels in self.sweeps().items():
            for level in levels:
                changes = self.sweep_changes(sweep, level)
                for r in range(runs):
                    seed = run_seed(self.seed, r)
                    scenario = build_scenario(self.config, seed, **changes)
                    data = scenario.generate(M, seed)
                    measure = scenario.measure(self.config.data.measure_M, seed)
                    for algorithm in ALGORITHMS:
                        result, wall_ms = timed_fit(algorithm, data, scenario.basis, self.config)
                        errors = evaluate_fit(scenario, result, measure)
                        row = {"sweep": sweep, "level": level, "algorithm": algorithm, "M": M, "run": r}
                        horizon = {"dt": scenario.spec.dt, "L": scenario.spec.L}
                        rows.append({**row, **horizon, "wall_ms": wall_ms, **errors})
                logger.info(f"Noise sweep {sweep}={level:g} finished")

        self.write_table("results.csv", rows, self.COLUMNS)
        slopes = {
            sweep: scaling_slopes([row for row in rows if row["sweep"] == sweep], "level", ERROR_METRICS)
            for sweep in dict.fromkeys(row["sweep"] for row in rows)
        }
        return {"M": M, "runs": runs, "slopes": slopes}


class RegularizerStudy(BaseExperiment):
    name = "study-regularizers"
    help = "Errors of ALS and ORALS under each regulariser at a small sample size"
    defaults = {
        "system": {**LJ_SYSTEM, "N": 20, "L": 5, "M": 64, "sigma": 1e-3, "sigma_obs": 1e-3},
        "graph": {"kind": "random", "degree": 2},
        "basis": {"preset": "lj3"},
        "kernel": {"preset": "lj"},
    }
    REGULARIZERS = ("none", "pinv", "minnorm", "tikhonov_id", "dartr")
    RUNS = 10
    COLUMNS = ("regularizer",) + RESULT_COLUMNS

    def run(self) -> Dict[str, Any]:
        choices = self.grid(self.config.study.regularizers, self.REGULARIZERS, "study.regularizers")
        M = self.config.system.M
        runs = self.runs(self.RUNS)
        rows: List[Dict[str, Any]] = []
        for r in range(runs):
            seed = run_seed(self.seed, r)
            scenario = build_scenario(self.config, seed)
            data = scenario.generate(M, seed)
            measure = scenario.measure(self.config.data.measure_M, seed)
            for choice in choices:
                for algorithm in ALGORITHMS:
                    result, wall_ms = timed_fit(algorithm, data, scenario.basis, self.config, reg=choice)
                    errors = evaluate_fit(scenario, result, measure)
                    rows.append(
                        {"regularizer": choice, "algorithm": algorithm, "M": M, "run": r, "wall_ms": wall_ms, **errors}
                    )

        self.write_table("results.csv", rows, self.COLUMNS)
        medians = {
            f"{choice}/{algorithm}": {
                metric: median_of(rows, metric, regularizer=choice, algorithm=algorithm) for metric in ERROR_METRICS
            }
            for choice in choices
            for algorithm in ALGORITHMS
        }
        return {"M": M, "runs": runs, "medians": medians}


class CrossoverStudy(BaseExperiment):
    """ALS against ORALS at a near-optimal and a large sample size, plus ALS over an (M, L) grid.

    The reference sizes are M = 4(N² + p)/(NL), around the information-theoretic count, and
    M = 10N²p/(NL), where operator regression becomes well posed.
    """

    name = "study-crossover"
    help = "Small- and large-sample errors of ALS and ORALS with a random Fourier kernel"
    defaults = {
        "system": {**RANDOM_FOURIER["system"], "N": 32, "sigma": 1e-4, "sigma_obs": 1e-4},
        "graph": {"kind": "random", "degree": 3},
        "basis": {**RANDOM_FOURIER["basis"], "p": 16},
        "kernel": RANDOM_FOURIER["kernel"],
    }
    RUNS = 5
    COLUMNS = ("algorithm", "L", "M", "run", "graph_err", "kernel_err", "wall_ms")

    def reference_sizes(self, N: int, p: int, L: int) -> List[int]:
        small = int(np.ceil(4 * (N**2 + p) / (N * L)))
        large = int(np.ceil(10 * N**2 * p / (N * L)))
        return [small, large]

    def run(self) -> Dict[str, Any]:
        system = self.config.system
        runs = self.runs(self.RUNS)
        p = self.config.basis.p or 16
        reference = self.reference_sizes(system.N, p, system.L)
        M_grid = sorted(self.grid(self.config.study.M_grid, reference, "study.M_grid"))
        L_grid = self.grid(self.config.study.L_grid, [system.L], "study.L_grid")
        rows: List[Dict[str, Any]] = []
        for r in range(runs):
            seed = run_seed(self.seed, r)
            for L in L_grid:
                scenario = build_scenario(self.config, seed, L=L)
                full = scenario.generate(M_grid[-1], seed)
                measure = scenario.measure(self.config.data.measure_M, seed)
                algorithms = ALGORITHMS if L == system.L else ("als",)
                for M in M_grid:
                    data = full.subset(range(M))
                    for algorithm in algorithms:
                        result, wall_ms = timed_fit(algorithm, data, scenario.basis, self.config)
                        errors = evaluate_fit(scenario, result, measure)
                        row = {"algorithm": algorithm, "L": L, "M": M, "run": r, "wall_ms": wall_ms}
                        rows.append({**row, **errors})
            logger.info(f"Crossover run {r + 1}/{runs} finished")

        self.write_table("results.csv", rows, self.COLUMNS)
        ratios = {}
        for M in M_grid:
            als = median_of(rows, "kernel_err", algorithm="als", L=system.L, M=M)
            orals = median_of(rows, "kernel_err", algorithm="orals", L=system.L, M=M)
            ratios[str(M)] = {"als": als, "orals": orals, "orals_over_als": orals / als if als > 0 else float("nan")}
        return {"M_grid": M_grid, "L_grid": L_grid, "runs": runs, "kernel_err_medians": ratios}


class Benchmark(BaseExperiment):
    """Wall time of assembly plus solve for both estimators over M at fixed N and over N at fixed M."""

    name = "benchmark"
    help = "Wall-clock scaling of ALS and ORALS in M and N"
    defaults = {
        "system": {**RANDOM_FOURIER["system"], "N": 16, "sigma": 1e-3},
        "graph": {"kind": "random", "degree": 3},
        "basis": {**RANDOM_FOURIER["basis"], "p": 8},
        "kernel": RANDOM_FOURIER["kernel"],
    }
    M_GRID = (256, 1024, 4096)
    N_GRID = (4, 8, 16, 32)
    N_SWEEP_M = 1024
    RUNS = 3
    COLUMNS = ("sweep", "algorithm", "N", "M", "run", "wall_ms")

    def timings(self, sweep: str, N: int, M: int, runs: int) -> List[Dict[str, Any]]:
        config = self.config.model_copy(deep=True)
        config.system.N = N
        config.graph.degree = min(config.graph.degree, N - 1)
        rows = []
        for r in range(runs):
            seed = run_seed(self.seed, r)
            scenario = build_scenario(config, seed)
            data = scenario.generate(M, seed)
            for algorithm in ALGORITHMS:
                _, wall_ms = timed_fit(algorithm, data, scenario.basis, config)
                rows.append({"sweep": sweep, "algorithm": algorithm, "N": N, "M": M, "run": r, "wall_ms": wall_ms})
        logger.info(f"Timed N={N}, M={M}")
        return rows

    def run(self) -> Dict[str, Any]:
        study = self.config.study
        runs = self.runs(self.RUNS)
        M_grid = self.grid(study.M_grid, self.M_GRID, "study.M_grid")
        N_grid = self.grid(study.N_grid, self.N_GRID, "study.N_grid")
        rows: List[Dict[str, Any]] = []
        for M in M_grid:
            rows += self.timings("M", self.config.system.N, M, runs)
        for N in N_grid:
            rows += self.timings("N", N, self.N_SWEEP_M, runs)

        self.write_table("timings.csv", rows, self.COLUMNS)
        slopes = {
            sweep: scaling_slopes([row for row in rows if row["sweep"] == sweep], sweep, ("wall_ms",))
            for sweep in ("M", "N")
        }
        median_ms = {
            f"{algorithm}/N={N}/M={M}": median_of(rows, "wall_ms", algorithm=algorithm, N=N, M=M)
            for algorithm, N, M in dict.fromkeys((row["algorithm"], row["N"], row["M"]) for row in rows)
        }
        return {"runs": runs, "slopes": slopes, "median_wall_ms": median_ms}
