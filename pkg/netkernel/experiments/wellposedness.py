"""Well-posedness studies: RIP constants, loss landscapes, estimator normality, coercivity, prediction bound."""

from typing import Any, Callable, Dict, List

import numpy as np

from netkernel.core.diagnostics import (
    exploration_measure,
    gaussian_coercivity_mc,
    gaussian_sensing_matrices,
    ips_sensing_matrices,
    landscape_scan,
    rip_scan,
)
from netkernel.core.estimators import normality_harness
from netkernel.core.metrics import basis_bound, empirical_trajectory_gap, trajectory_bound
from netkernel.core.model import WeightMatrix
from netkernel.core.presets import basis_preset, kuramoto_basis, spline_basis
from netkernel.core.simulate import simulate
from netkernel.core.utils.logging import get_logger
from netkernel.experiments.base import BaseExperiment, build_scenario, derive_seed, orals_regularizer

logger = get_logger(__name__)

RIP_BASES = ("rip_fourier", "rip_hermite", "rip_lj")


class RipStudy(BaseExperiment):
    """RIP constants of IPS and Gaussian sensing, and loss landscapes of the rank-one sensing problem."""

    name = "study-rip"
    help = "Restricted isometry constants and loss-landscape local minima"
    defaults = {"system": {"N": 3, "d": 1, "L": 1}, "basis": {"preset": "rip_fourier"}, "kernel": {"preset": None}}
    # Fourier landscapes use twice as many sensing matrices
    LANDSCAPE_M_FACTOR = {"rip_fourier": 2}
    RIP_COLUMNS = ("sensing", "C", "delta", "n_probe", "ratio_min", "ratio_max")
    RATIO_COLUMNS = ("sensing", "probe", "ratio", "normalized")
    LANDSCAPE_COLUMNS = ("basis", "instance", "truth_theta1", "truth_theta2", "local_minima", "spurious_minima")
    GRID_COLUMNS = ("theta1", "theta2", "loss")

    def rip(self) -> Dict[str, Any]:
        study = self.config.study
        sensing = {
            name: ips_sensing_matrices(basis_preset(name, 1), study.rip_M, derive_seed(self.seed, k))
            for k, name in enumerate(RIP_BASES)
        }
        sensing["gaussian"] = gaussian_sensing_matrices(study.rip_M, 2, 2, derive_seed(self.seed, len(RIP_BASES)))

        reports, ratio_rows = {}, []
        for name, blocks in sensing.items():
            report = rip_scan(blocks, study.n_probe, self.seed)
            reports[name] = report.to_dict()
            ratio_rows += [
                {"sensing": name, "probe": k, "ratio": float(ratio), "normalized": float(normalized)}
                for k, (ratio, normalized) in enumerate(zip(report.ratios, report.normalized))
            ]
            logger.info(f"RIP {name}: delta={report.delta:.4f}")
        self.write_table("rip.csv", [{"sensing": name, **r} for name, r in reports.items()], self.RIP_COLUMNS)
        self.write_table("rip_ratios.csv", ratio_rows, self.RATIO_COLUMNS)
        return {name: r["delta"] for name, r in reports.items()}

    def landscapes(self) -> Dict[str, Any]:
        study = self.config.study
        rows, counts = [], {}
        for name in RIP_BASES:
            basis = basis_preset(name, 1)
            M = study.landscape_M * self.LANDSCAPE_M_FACTOR.get(name, 1)
            with_spurious = 0
            for instance in range(study.instances):
                seed = derive_seed(self.seed, 100 + RIP_BASES.index(name), instance)
                truth = tuple(np.random.default_rng(seed).uniform(0.0, 2 * np.pi, size=2))
                report = landscape_scan(study.landscape_grid, ips_sensing_matrices(basis, M, seed), truth)
                with_spurious += int(bool(report.spurious_minima))
                rows.append(
                    {
                        "basis": name,
                        "instance": instance,
                        "truth_theta1": truth[0],
                        "truth_theta2": truth[1],
                        "local_minima": len(report.local_minima),
                        "spurious_minima": len(report.spurious_minima),
                    }
                )
                if instance == 0:
                    self.write_table(f"landscape_{name}.csv", report.rows(), self.GRID_COLUMNS)
            counts[name] = with_spurious
            logger.info(f"Landscapes {name}: {with_spurious}/{study.instances} instances with spurious minima")
        self.write_table("landscapes.csv", rows, self.LANDSCAPE_COLUMNS)
        return counts

    def run(self) -> Dict[str, Any]:
        return {"delta": self.rip(), "instances_with_spurious_minima": self.landscapes()}


class NormalityStudy(BaseExperiment):
    """Spread of the operator-regression estimates against their asymptotic Gaussian covariance."""

    name = "study-normality"
    help = "Asymptotic normality check of the ORALS operator-regression stage"
    defaults = {
        "system": {
            "N": 3,
            "d": 1,
            "L": 1,
            "M": 2000,
            "sigma": 0.1,
            "dt": 0.01,
            "init": {"kind": "gaussian", "mean": 0.0, "std": 1.0},
        },
        "graph": {"kind": "random", "degree": 2},
        "basis": {"preset": "rip_fourier"},
        "kernel": {"preset": None, "coefficients": [1.0, 0.5]},
    }

    def run(self) -> Dict[str, Any]:
        scenario = build_scenario(self.config)
        M, reps = self.config.system.M, self.config.study.reps
        report = normality_harness(
            scenario.spec,
            scenario.a,
            scenario.coef,
            scenario.basis,
            M,
            reps,
            self.seed,
            reg=orals_regularizer(self.config),
        )
        rows = [{"agent": i, "discrepancy": float(value)} for i, value in enumerate(report.discrepancy)]
        self.write_table("normality.csv", rows, ("agent", "discrepancy"))
        return {"M": M, "reps": reps, **report.to_dict()}


def coercivity_profiles(count: int, seed: int) -> List[Callable[[np.ndarray], np.ndarray]]:
    """The constant profile followed by ``count - 1`` random cubic-spline profiles on [0, 5]."""
    splines = spline_basis(1, 8)
    rng = np.random.default_rng(seed)
    profiles: List[Callable[[np.ndarray], np.ndarray]] = [np.ones_like]
    for _ in range(count - 1):
        w = rng.standard_normal(splines.p)
        profiles.append(lambda r, w=w: splines.profiles(r) @ w)
    return profiles


class CoercivityStudy(BaseExperiment):
    """Monte-Carlo coercivity ratios for Gaussian states next to their reference constants."""

    name = "study-coercivity"
    help = "Gaussian coercivity ratios in dimensions 1 to 3"
    defaults = {"kernel": {"preset": None}}
    PROFILES = 5
    COLUMNS = ("d", "profile", "ratio", "bound", "within_bound")

    def run(self) -> Dict[str, Any]:
        study = self.config.study
        profiles = coercivity_profiles(self.PROFILES, self.seed)
        rows = []
        for d in study.dims:
            for k, profile in enumerate(profiles):
                report = gaussian_coercivity_mc(d, profile, study.n_mc, derive_seed(self.seed, d, k))
                rows.append({"profile": k, **report.to_dict()})
            logger.info(f"Coercivity d={d}: max ratio {max(row['ratio'] for row in rows if row['d'] == d):.4f}")
        self.write_table("coercivity.csv", rows, self.COLUMNS)
        worst = {str(d): max(row["ratio"] for row in rows if row["d"] == d) for d in study.dims}
        return {"n_mc": study.n_mc, "max_ratio": worst, "all_within_bound": all(row["within_bound"] for row in rows)}


class TrajectoryBoundStudy(BaseExperiment):
    """Empirical prediction gap of perturbed (a, c) pairs against the a-priori trajectory bound."""

    name = "study-trajectory-bound"
    help = "Monte-Carlo check of the trajectory prediction bound"
    defaults = {
        "system": {
            "N": 6,
            "d": 1,
            "sigma": 0.1,
            "dt": 1e-3,
            "L": 100,
            "init": {"kind": "uniform_box", "lo": -2.0, "hi": 2.0},
        },
        "graph": {"kind": "random", "degree": 3},
        "basis": {"preset": "kuramoto_h_phi"},
        "kernel": {"preset": "kuramoto"},
    }
    PERTURBATION_RANGE = (1e-3, 1e-1)
    COLUMNS = ("instance", "eps", "gap", "bound", "holds")

    def run(self) -> Dict[str, Any]:
        study = self.config.study
        scenario = build_scenario(self.config)
        basis = kuramoto_basis(include_truth=True)
        c = np.zeros(basis.p)
        c[-1] = scenario.truth.coef[0]
        a = scenario.a
        rows = []
        for instance in range(study.instances):
            rng = np.random.default_rng(derive_seed(self.seed, instance))
            eps = float(10 ** rng.uniform(*np.log10(self.PERTURBATION_RANGE)))
            a_hat = WeightMatrix.from_raw(a.entries + eps * rng.uniform(0.0, 1.0, size=a.entries.shape))
            c_hat = c + eps * rng.standard_normal(basis.p)
            spec = scenario.spec.replace(seed=derive_seed(self.seed, instance, 1))
            true = simulate(spec, a, basis, c, study.paths)
            predicted = simulate(spec, a_hat, basis, c_hat, study.paths)
            gap = empirical_trajectory_gap(true, predicted)
            C0 = basis_bound(basis, exploration_measure(true))
            bound = trajectory_bound(a, a_hat, c, c_hat, C0, spec.T)
            rows.append({"instance": instance, "eps": eps, "gap": gap, "bound": bound, "holds": gap <= bound})
        self.write_table("trajectory_bound.csv", rows, self.COLUMNS)
        return {
            "instances": study.instances,
            "paths": study.paths,
            "all_hold": all(row["holds"] for row in rows),
            "max_gap": max(row["gap"] for row in rows),
        }
