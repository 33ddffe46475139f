import csv
import json

import numpy as np
import pytest

from netkernel.core.config import EXPERIMENT_NAMES, parse_experiment_config
from netkernel.core.errors import UnknownExperimentError
from netkernel.core.utils.storage import read_trajectories
from netkernel.experiments import (
    AVAILABLE_EXPERIMENTS,
    BaseExperiment,
    experiment_defaults,
    get_available_experiments,
    get_experiment,
)
from netkernel.experiments.base import derive_seed, loglog_slope, median_of, quartiles, scaling_slopes

SMALL_LJ = {"system": {"N": 4, "d": 2, "L": 4, "M": 30, "dt": 1e-3}, "data": {"test_M": 4, "measure_M": 10}}


def make_config(name, **sections):
    return parse_experiment_config({"experiment": name, **sections}, name, experiment_defaults(name))


def run(name, out_dir, **sections):
    experiment = get_experiment(name)(make_config(name, **sections), out_dir)
    return experiment.execute()


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_registry_covers_every_experiment_name():
    assert set(AVAILABLE_EXPERIMENTS) == set(EXPERIMENT_NAMES)
    for name, cls in get_available_experiments().items():
        assert issubclass(cls, BaseExperiment)
        assert cls.name == name
        assert cls.help


def test_unknown_experiment():
    with pytest.raises(UnknownExperimentError):
        get_experiment("study-everything")
    assert experiment_defaults("study-everything") == {}
    assert experiment_defaults(None) == {}


def test_defaults_are_copied():
    layer = experiment_defaults("typical-run")
    layer["system"] = {}
    assert experiment_defaults("typical-run")["system"]


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert derive_seed(1, 2) != derive_seed(1, 3)
    assert derive_seed(1, 2) != derive_seed(2, 2)


def test_quartiles_and_median():
    rows = [{"algorithm": "als", "M": 10, "err": float(v)} for v in range(1, 6)]
    rows.append({"algorithm": "orals", "M": 10, "err": 7.0})
    table = quartiles(rows, ("algorithm", "M"), "err")
    assert [row["algorithm"] for row in table] == ["als", "orals"]
    assert (table[0]["q1"], table[0]["median"], table[0]["q3"]) == (2.0, 3.0, 4.0)
    assert table[0]["metric"] == "err"
    assert median_of(rows, "err", algorithm="orals") == 7.0
    assert np.isnan(median_of(rows, "err", algorithm="dartr"))


def test_loglog_slope():
    M = np.array([10.0, 100.0, 1000.0])
    assert loglog_slope(M, M**-0.5) == pytest.approx(-0.5)
    assert np.isnan(loglog_slope([10.0, 100.0], [1.0, 0.0]))


def test_scaling_slopes_take_median_over_runs():
    rows = [
        {"algorithm": "als", "run": r, "M": M, "graph_err": (1.0 + r) * M**-slope}
        for r, slope in enumerate((0.4, 0.5, 0.6))
        for M in (10, 100, 1000)
    ]
    assert scaling_slopes(rows, "M", ["graph_err"]) == {"als/graph_err": pytest.approx(-0.5)}


def test_simulate_then_fit_from_file(tmp_path):
    sim = run("simulate", tmp_path / "sim", **SMALL_LJ)
    path = sim.summary["path"]
    data = read_trajectories(path)
    assert data.states.shape == (30, 5, 4, 2)
    assert data.meta["a_hash"] == sim.summary["a_hash"]

    fit = run("fit-als", tmp_path / "fit", system=SMALL_LJ["system"], data={**SMALL_LJ["data"], "input": path})
    errors = fit.summary["errors"]
    assert set(errors) >= {"graph_err", "kernel_err", "traj_err"}
    assert np.isfinite(errors["graph_err"])
    rows = read_rows(tmp_path / "fit" / "results.csv")
    assert rows[0]["algorithm"] == "als"
    summary = json.loads((tmp_path / "fit" / "summary.json").read_text())
    assert summary["experiment"] == "fit-als"


def test_fit_on_foreign_data_skips_error_metrics(tmp_path):
    sim = run("simulate", tmp_path / "sim", **SMALL_LJ)
    other = {**SMALL_LJ, "graph": {"kind": "random", "degree": 2, "seed": 99}}
    fit = run("fit-orals", tmp_path / "fit", **{**other, "data": {"input": sim.summary["path"]}})
    assert "errors" not in fit.summary
    assert not (tmp_path / "fit" / "results.csv").exists()


def test_typical_run_fits_both_estimators(tmp_path):
    result = run("typical-run", tmp_path, **SMALL_LJ, basis={"preset": "lj3"})
    assert set(result.summary["fits"]) == {"als", "orals"}
    assert [row["algorithm"] for row in read_rows(tmp_path / "results.csv")] == ["als", "orals"]
    assert result.summary["test_M"] == 4


def test_convergence_study_writes_quartiles(tmp_path):
    result = run("study-convergence", tmp_path, **SMALL_LJ, study={"M_grid": [12, 30], "runs": 2})
    rows = read_rows(tmp_path / "results.csv")
    assert len(rows) == 2 * 2 * 2
    quartile_rows = read_rows(tmp_path / "quartiles.csv")
    assert {row["metric"] for row in quartile_rows} == {"graph_err", "kernel_err", "traj_err"}
    assert set(result.summary["slopes"]) == {
        "als/graph_err",
        "als/kernel_err",
        "orals/graph_err",
        "orals/kernel_err",
    }


def test_empty_grid_is_rejected(tmp_path):
    experiment = get_experiment("study-convergence")(make_config("study-convergence", study={"M_grid": []}), tmp_path)
    with pytest.raises(ValueError):
        experiment.execute()


def test_coercivity_study(tmp_path):
    result = run("study-coercivity", tmp_path, study={"n_mc": 2000, "dims": [1, 2]})
    rows = read_rows(tmp_path / "coercivity.csv")
    assert len(rows) == 2 * 5
    assert set(result.summary["max_ratio"]) == {"1", "2"}


def test_rip_study(tmp_path):
    study = {"n_probe": 100, "rip_M": 50, "landscape_grid": 8, "landscape_M": 20, "instances": 1}
    result = run("study-rip", tmp_path, study=study)
    assert set(result.summary["delta"]) == {"rip_fourier", "rip_hermite", "rip_lj", "gaussian"}
    assert len(read_rows(tmp_path / "rip_ratios.csv")) == 4 * 100
    assert len(read_rows(tmp_path / "landscape_rip_fourier.csv")) == 64
    assert len(read_rows(tmp_path / "landscapes.csv")) == 3


def test_fit_threefold_reports_per_agent_errors(tmp_path):
    result = run(
        "fit-threefold",
        tmp_path,
        system={"M": 30, "L": 10},
        data={"measure_M": 10},
        estimation={"Q": 2, "max_iter": 3},
    )
    assert result.summary["Q"] == 2
    errors = result.summary["errors"]
    assert set(errors) == {"graph_err", "kernel_err", "kernel_err_per_agent", "type_ari"}
    assert len(errors["kernel_err_per_agent"]) == 8
    assert -1.0 <= errors["type_ari"] <= 1.0


def test_noise_study_uses_a_system_per_sweep(tmp_path):
    study = {"sigma_grid": [1e-3, 1e-2], "sigma_obs_grid": [1e-5, 1e-4], "runs": 1}
    result = run("study-noise", tmp_path, **SMALL_LJ, study=study)
    rows = read_rows(tmp_path / "results.csv")
    assert len(rows) == 2 * 2 * 2
    for row in rows:
        if row["sweep"] == "sigma":
            assert (float(row["dt"]), int(row["L"])) == (1e-3, 4)
        else:
            assert (float(row["dt"]), int(row["L"])) == (1e-4, 10)
    assert set(result.summary["slopes"]) == {"sigma", "sigma_obs"}
    assert set(result.summary["slopes"]["sigma_obs"]) == {
        "als/graph_err",
        "als/kernel_err",
        "orals/graph_err",
        "orals/kernel_err",
    }


@pytest.mark.slow
def test_noise_study_errors_decay_linearly(tmp_path):
    study = {"sigma_grid": [1e-4, 1e-3, 1e-2], "sigma_obs_grid": [1e-6, 1e-5, 1e-4], "runs": 3}
    result = run("study-noise", tmp_path, data={"measure_M": 200}, study=study)
    for sweep, slopes in result.summary["slopes"].items():
        for key, slope in slopes.items():
            assert 0.8 <= slope <= 1.2, (sweep, key, slope)


def test_regularizer_study(tmp_path):
    study = {"regularizers": ["none", "tikhonov_id"], "runs": 1}
    result = run("study-regularizers", tmp_path, system={"N": 6, "M": 30}, data={"measure_M": 10}, study=study)
    rows = read_rows(tmp_path / "results.csv")
    assert [(row["regularizer"], row["algorithm"]) for row in rows] == [
        ("none", "als"),
        ("none", "orals"),
        ("tikhonov_id", "als"),
        ("tikhonov_id", "orals"),
    ]
    assert set(result.summary["medians"]) == {"none/als", "none/orals", "tikhonov_id/als", "tikhonov_id/orals"}
    assert set(result.summary["medians"]["none/als"]) == {"graph_err", "kernel_err"}


def test_crossover_study_fits_als_only_off_the_base_horizon(tmp_path):
    ridge = {"mode": "tikhonov_id", "lam": 1e-8}
    result = run(
        "study-crossover",
        tmp_path,
        system={"N": 4},
        data={"measure_M": 20},
        estimation={"orals_regularizer": ridge},
        study={"M_grid": [40, 80], "L_grid": [2, 3], "runs": 1},
    )
    rows = read_rows(tmp_path / "results.csv")
    assert {row["algorithm"] for row in rows if row["L"] == "3"} == {"als"}
    assert len(rows) == 2 * 2 + 2
    assert set(result.summary["kernel_err_medians"]) == {"40", "80"}
    assert set(result.summary["kernel_err_medians"]["40"]) == {"als", "orals", "orals_over_als"}


def test_benchmark_times_both_sweeps(tmp_path):
    result = run("benchmark", tmp_path, system={"N": 4}, study={"M_grid": [64, 128], "N_grid": [4, 6], "runs": 1})
    rows = read_rows(tmp_path / "timings.csv")
    assert len(rows) == (2 + 2) * 2
    assert all(float(row["wall_ms"]) > 0 for row in rows)
    assert {row["M"] for row in rows if row["sweep"] == "N"} == {"1024"}
    assert set(result.summary["slopes"]) == {"M", "N"}
    assert set(result.summary["slopes"]["M"]) == {"als/wall_ms", "orals/wall_ms"}


def test_kuramoto_study_writes_kernel_curves(tmp_path):
    result = run("kuramoto", tmp_path, data={"measure_M": 20}, study={"M_grid": [8, 16], "runs": 1})
    assert len(read_rows(tmp_path / "results.csv")) == 2 * 2 * 2
    curves = read_rows(tmp_path / "kernel_curves.csv")
    assert len(curves) == 2 * 2 * 2 * 201
    assert {row["space"] for row in curves} == {"kuramoto_h", "kuramoto_h_phi"}
    assert "kuramoto_h_phi/orals/M=16" in result.summary["medians"]


def test_leader_follower_study_classifies_the_planted_graph(tmp_path):
    result = run("leader-follower", tmp_path, data={"measure_M": 20}, study={"M_grid": [30], "runs": 1})
    planted = result.summary["planted_leaders"]
    assert len(planted) == 2
    assert sorted(result.summary["true_graph_classification"]["leaders"]) == sorted(planted)
    rows = read_rows(tmp_path / "results.csv")
    assert len(rows) == 1
    assert rows[0]["leaders_match"] in ("True", "False")
    assert set(result.summary["by_M"]) == {"30"}


def test_multitype_selection_picks_one_candidate_per_run(tmp_path):
    result = run(
        "multitype-select",
        tmp_path,
        system={"M": 20, "L": 10},
        data={"test_M": 2, "test_L": 20, "measure_M": 10},
        estimation={"max_iter": 3},
        study={"runs": 1},
    )
    rows = read_rows(tmp_path / "results.csv")
    assert len(rows) == 2 * 2
    for q_true in ("1", "2"):
        chosen = [row["Q"] for row in rows if row["Q_true"] == q_true and row["selected"] == "True"]
        assert len(chosen) == 1
    assert result.summary["candidates"] == [1, 2]
    for entry in result.summary["selection"].values():
        assert entry["wins"] in (0, 1)
        assert set(entry["median_traj_err"]) == {"1", "2"}


def test_normality_study(tmp_path):
    result = run("study-normality", tmp_path, system={"M": 50}, study={"reps": 3})
    assert (result.summary["M"], result.summary["reps"]) == (50, 3)
    rows = read_rows(tmp_path / "normality.csv")
    assert [row["agent"] for row in rows] == ["0", "1", "2"]
    assert result.summary["max_discrepancy"] == pytest.approx(max(float(row["discrepancy"]) for row in rows))


def test_trajectory_bound_holds(tmp_path):
    result = run("study-trajectory-bound", tmp_path, system={"L": 20}, study={"instances": 2, "paths": 5})
    rows = read_rows(tmp_path / "trajectory_bound.csv")
    assert len(rows) == 2
    assert all(row["holds"] == "True" for row in rows)
    assert result.summary["all_hold"] is True
    assert result.summary["max_gap"] <= max(float(row["bound"]) for row in rows)
