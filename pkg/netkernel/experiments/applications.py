"""Application studies: Kuramoto oscillators, leader-follower networks, and multitype model selection."""

from dataclasses import replace
from typing import Any, Dict, List

import numpy as np

from netkernel.core.errors import NoLeadersError
from netkernel.core.estimators import model_select
from netkernel.core.metrics import LeadershipConfig, classify_leaders_followers
from netkernel.core.model import eval_kernel
from netkernel.core.presets import basis_preset
from netkernel.core.utils.logging import get_logger
from netkernel.experiments.base import (
    BaseExperiment,
    build_scenario,
    evaluate_fit,
    median_of,
    prediction_spec,
    run_seed,
    threefold_options,
    timed_fit,
)
from netkernel.experiments.fitting import MULTITYPE_SETTING

logger = get_logger(__name__)


class KuramotoStudy(BaseExperiment):
    """Fit the sine-coupled oscillator network in the hypothesis spaces H (without the truth) and H_φ (with it)."""

    name = "kuramoto"
    help = "Kuramoto oscillators estimated in a misspecified and a well-specified trigonometric space"
    defaults = {
        "system": {
            "N": 10,
            "d": 1,
            "sigma": 1e-4,
            "sigma_obs": 1e-3,
            "dt": 1e-3,
            "L": 100,
            "init": {"kind": "uniform_box", "lo": -2.0, "hi": 2.0},
        },
        "graph": {"kind": "random", "degree": 3},
        "basis": {"preset": "kuramoto_h"},
        "kernel": {"preset": "kuramoto"},
    }
    SPACES = ("kuramoto_h", "kuramoto_h_phi")
    M_GRID = (8, 64, 512)
    RUNS = 20
    CURVE_POINTS = 201
    COLUMNS = ("space", "algorithm", "M", "run", "graph_err", "kernel_err", "wall_ms")
    CURVE_COLUMNS = ("space", "algorithm", "M", "x", "true", "mean", "sd")

    def run(self) -> Dict[str, Any]:
        M_grid = sorted(self.grid(self.config.study.M_grid, self.M_GRID, "study.M_grid"))
        runs = self.runs(self.RUNS)
        x = np.linspace(-np.pi, np.pi, self.CURVE_POINTS)[:, None]
        rows: List[Dict[str, Any]] = []
        curves: Dict[tuple, List[np.ndarray]] = {}
        truth_curve = None
        for r in range(runs):
            seed = run_seed(self.seed, r)
            scenario = build_scenario(self.config, seed)
            truth_curve = eval_kernel(scenario.truth.basis, scenario.coef, x)
            full = scenario.generate(M_grid[-1], seed)
            measure = scenario.measure(self.config.data.measure_M, seed)
            for space in self.SPACES:
                hypothesis = replace(scenario, basis=basis_preset(space, 1))
                for M in M_grid:
                    data = full.subset(range(M))
                    for algorithm in ("als", "orals"):
                        result, wall_ms = timed_fit(algorithm, data, hypothesis.basis, self.config)
                        errors = evaluate_fit(hypothesis, result, measure)
                        row = {"space": space, "algorithm": algorithm, "M": M, "run": r, "wall_ms": wall_ms}
                        rows.append({**row, **errors})
                        curve = eval_kernel(hypothesis.basis, result.c_hat, x)
                        curves.setdefault((space, algorithm, M), []).append(curve)
            logger.info(f"Kuramoto run {r + 1}/{runs} finished")

        self.write_table("results.csv", rows, self.COLUMNS)
        curve_rows = []
        for (space, algorithm, M), samples in curves.items():
            stacked = np.stack(samples)
            for k in range(x.shape[0]):
                curve_rows.append(
                    {
                        "space": space,
                        "algorithm": algorithm,
                        "M": M,
                        "x": float(x[k, 0]),
                        "true": float(truth_curve[k]),
                        "mean": float(stacked[:, k].mean()),
                        "sd": float(stacked[:, k].std()),
                    }
                )
        self.write_table("kernel_curves.csv", curve_rows, self.CURVE_COLUMNS)
        medians = {
            f"{space}/{algorithm}/M={M}": {
                metric: median_of(rows, metric, space=space, algorithm=algorithm, M=M)
                for metric in ("graph_err", "kernel_err")
            }
            for space, algorithm, M in curves
        }
        return {"M_grid": M_grid, "runs": runs, "medians": medians}


def same_partition(a, b) -> bool:
    return {frozenset(group) for group in a} == {frozenset(group) for group in b}


class LeaderFollowerStudy(BaseExperiment):
    """Estimate a planted two-leader network with ALS and recover its leaders and groups."""

    name = "leader-follower"
    help = "Leaders and follower groups identified from the ALS graph estimate"
    defaults = {
        "system": {
            "N": 20,
            "d": 1,
            "sigma": 1e-3,
            "dt": 0.01,
            "L": 10,
            "init": {"kind": "uniform_box", "lo": 0.0, "hi": 3.0},
        },
        "graph": {"kind": "leader_follower", "n_leaders": 2},
        "basis": {"preset": "leader_follower"},
        "kernel": {"preset": "leader_follower"},
    }
    M_GRID = (15, 30, 100)
    RUNS = 5
    COLUMNS = ("M", "run", "graph_err", "kernel_err", "leaders", "leaders_match", "groups_match")

    def classify(self, a, seed: int):
        est = self.config.estimation
        try:
            return classify_leaders_followers(a, LeadershipConfig(est.alpha, est.beta), seed=seed)
        except NoLeadersError as e:
            logger.warning(f"No leaders identified: {e.message}")
            return None

    def run(self) -> Dict[str, Any]:
        M_grid = sorted(self.grid(self.config.study.M_grid, self.M_GRID, "study.M_grid"))
        runs = self.runs(self.RUNS)
        rows: List[Dict[str, Any]] = []
        reference = None
        for r in range(runs):
            seed = run_seed(self.seed, r)
            scenario = build_scenario(self.config, seed)
            if reference is None:
                reference = self.classify(scenario.a, seed)
            full = scenario.generate(M_grid[-1], seed)
            measure = scenario.measure(self.config.data.measure_M, seed)
            for M in M_grid:
                result, _ = timed_fit("als", full.subset(range(M)), scenario.basis, self.config)
                errors = evaluate_fit(scenario, result, measure)
                found = self.classify(result.a_hat, seed)
                leaders = list(found.leaders) if found else []
                rows.append(
                    {
                        "M": M,
                        "run": r,
                        **errors,
                        "leaders": " ".join(str(i) for i in leaders),
                        "leaders_match": bool(found) and set(leaders) == set(scenario.leaders),
                        "groups_match": bool(found) and same_partition(found.groups, scenario.groups),
                    }
                )
                logger.info(f"M={M}, run {r}: leaders {leaders}, graph error {errors['graph_err']:.3e}")

        self.write_table("results.csv", rows, self.COLUMNS)
        by_M = {
            str(M): {
                "graph_err_median": median_of(rows, "graph_err", M=M),
                "leaders_match": sum(row["leaders_match"] for row in rows if row["M"] == M),
                "groups_match": sum(row["groups_match"] for row in rows if row["M"] == M),
            }
            for M in M_grid
        }
        return {
            "M_grid": M_grid,
            "runs": runs,
            "planted_leaders": list(scenario.leaders),
            "true_graph_classification": reference.to_dict() if reference else None,
            "by_M": by_M,
        }


class MultitypeSelection(BaseExperiment):
    """For each true number of types, pick Q by long-horizon trajectory prediction over repeated runs."""

    name = "multitype-select"
    help = "Model selection of the number of kernel types with three-fold ALS"
    defaults = {
        **MULTITYPE_SETTING,
        "data": {"test_M": 10, "test_dt": 1e-2, "test_L": 500},
        "estimation": {"max_iter": 50, "q_candidates": [1, 2]},
    }
    Q_TRUE = (1, 2)
    RUNS = 10
    COLUMNS = ("Q_true", "run", "Q", "traj_err_mean", "traj_err_sd", "converged", "selected")

    def run(self) -> Dict[str, Any]:
        candidates = self.grid(self.config.estimation.q_candidates, [1, 2], "estimation.q_candidates")
        runs = self.runs(self.RUNS)
        opts = threefold_options(self.config)
        rows: List[Dict[str, Any]] = []
        summary: Dict[str, Any] = {}
        for q_true in self.Q_TRUE:
            config = self.config.model_copy(deep=True)
            config.kernel.types = q_true
            wins = 0
            for r in range(runs):
                seed = run_seed(self.seed, r)
                scenario = build_scenario(config, seed)
                train = scenario.generate(config.system.M, seed)
                test = scenario.test_paths(config.data.test_M, seed, prediction_spec(config, scenario))
                best, table = model_select(train, test, scenario.basis, candidates, opts)
                wins += int(best == q_true)
                rows += [{"Q_true": q_true, "run": r, **entry, "selected": entry["Q"] == best} for entry in table]
                logger.info(f"Q_true={q_true}, run {r}: selected Q={best}")

            errors = {q: median_of(rows, "traj_err_mean", Q_true=q_true, Q=q) for q in candidates}
            entry = {"wins": wins, "runs": runs, "median_traj_err": {str(q): e for q, e in errors.items()}}
            if 1 in errors and 2 in errors and errors[2] > 0:
                entry["ratio_q1_over_q2"] = errors[1] / errors[2]
            summary[f"Q_true={q_true}"] = entry

        self.write_table("results.csv", rows, self.COLUMNS)
        return {"candidates": sorted(candidates), "selection": summary}
