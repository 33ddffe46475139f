"""Euler–Maruyama trajectory generation and observation noise."""

import hashlib
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from netkernel.core.basis import BasisSpec
from netkernel.core.errors import DimensionMismatchError, NonFiniteInputError, NonFiniteStateError
from netkernel.core.model import SystemSpec, WeightMatrix, drift_batch, pairwise_diffs
from netkernel.core.utils.logging import get_logger
from netkernel.core.utils.parallel import chunk_ranges, ordered_map
from netkernel.globals import Config

logger = get_logger(__name__)

BLOWUP_THRESHOLD = 1e12

# Independent stream tags per trajectory
INIT_STREAM = 0
NOISE_STREAM = 1
OBS_STREAM = 2

__all__ = [
    "TrajectoryData",
    "simulate",
    "add_observation_noise",
    "pairwise_diffs",
    "trajectory_rng",
    "array_digest",
]


def trajectory_rng(seed: int, m: int, stream: int) -> np.random.Generator:
    """Counter-based generator for trajectory m; independent of M and of scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, m, stream])))


def array_digest(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype="<f8").tobytes()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class TrajectoryData:
    """States of shape (M, L+1, N, d) sampled every ``dt``."""

    states: np.ndarray
    dt: float
    spec: Optional[SystemSpec] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 4:
            raise DimensionMismatchError(f"Trajectory states must have shape (M, L+1, N, d), got {states.shape}")
        if states.shape[0] < 1 or states.shape[1] < 2:
            raise DimensionMismatchError(f"Need M >= 1 and at least two time points, got {states.shape}")
        if not np.all(np.isfinite(states)):
            raise NonFiniteInputError("Trajectory states must be finite")
        object.__setattr__(self, "states", states)

    @property
    def M(self) -> int:
        return self.states.shape[0]

    @property
    def L(self) -> int:
        return self.states.shape[1] - 1

    @property
    def N(self) -> int:
        return self.states.shape[2]

    @property
    def d(self) -> int:
        return self.states.shape[3]

    @property
    def T(self) -> float:
        return self.L * self.dt

    @property
    def sigma_obs(self) -> float:
        return float(self.meta.get("sigma_obs", 0.0))

    @property
    def initial_states(self) -> np.ndarray:
        return self.states[:, 0]

    def subset(self, trajectories: range) -> "TrajectoryData":
        return TrajectoryData(self.states[trajectories.start : trajectories.stop], self.dt, self.spec, dict(self.meta))

    def sidecar(self) -> Dict[str, Any]:
        return {
            "schema_version": 1,
            "spec": self.spec.to_dict() if self.spec is not None else None,
            "meta": self.meta,
        }


def _initial_states(spec: SystemSpec, trajectories: range) -> np.ndarray:
    shape = (spec.N, spec.d)
    return np.stack([spec.init.sample(trajectory_rng(spec.seed, m, INIT_STREAM), shape) for m in trajectories])


def _simulate_chunk(spec, a, basis, c, trajectories: range, X0: np.ndarray) -> np.ndarray:
    B = len(trajectories)
    noise = np.stack(
        [trajectory_rng(spec.seed, m, NOISE_STREAM).standard_normal((spec.L, spec.N, spec.d)) for m in trajectories]
    )
    out = np.empty((B, spec.L + 1, spec.N, spec.d))
    out[:, 0] = X0
    scale = spec.sigma * np.sqrt(spec.dt)
    X = X0
    for l in range(spec.L):
        X = X + drift_batch(a, basis, c, X) * spec.dt
        if spec.sigma > 0:
            X = X + scale * noise[:, l]
        bad = ~np.isfinite(X) | (np.abs(X) > BLOWUP_THRESHOLD)
        if np.any(bad):
            b = int(np.argmax(bad.reshape(B, -1).any(axis=1)))
            m = trajectories[b]
            raise NonFiniteStateError(
                f"Trajectory {m} blew up at step {l + 1} (|X| > {BLOWUP_THRESHOLD:g})", trajectory=m, step=l + 1
            )
        out[:, l + 1] = X
    return out


def simulate(
    spec: SystemSpec,
    a: WeightMatrix,
    basis: BasisSpec,
    c: np.ndarray,
    M: int,
    initial_states: Optional[np.ndarray] = None,
    threads: Optional[int] = None,
) -> TrajectoryData:
    """Generate M trajectories of X_{l+1} = X_l + a·B(X_l)·c·dt + σ·√dt·W_l.

    Trajectory m draws its initial condition and Brownian increments from streams keyed by
    (spec.seed, m), so simulate(M=10) equals the first 10 trajectories of simulate(M=100) and the
    result is the same for any thread count. ``initial_states`` of shape (M, N, d) replaces the
    sampled initial conditions without changing the noise streams.
    """
    if M < 1:
        raise DimensionMismatchError(f"Invalid M={M}. Must be >= 1")
    if a.N != spec.N:
        raise DimensionMismatchError(f"Weight matrix has N={a.N}, system has N={spec.N}")
    if basis.dim_d != spec.d:
        raise DimensionMismatchError(f"Basis dimension {basis.dim_d} does not match d={spec.d}")
    c = np.asarray(c, dtype=float)

    if initial_states is not None:
        initial_states = np.asarray(initial_states, dtype=float)
        if initial_states.shape != (M, spec.N, spec.d):
            raise DimensionMismatchError(
                f"initial_states must have shape {(M, spec.N, spec.d)}, got {initial_states.shape}"
            )

    chunks = chunk_ranges(M, Config.CHUNK_TRAJECTORIES)

    def run(trajectories: range) -> np.ndarray:
        if initial_states is None:
            X0 = _initial_states(spec, trajectories)
        else:
            X0 = initial_states[trajectories.start : trajectories.stop]
        return _simulate_chunk(spec, a, basis, c, trajectories, X0)

    states = np.concatenate(ordered_map(run, chunks, threads), axis=0)
    logger.debug(f"Simulated M={M} trajectories (N={spec.N}, d={spec.d}, L={spec.L}, sigma={spec.sigma:g})")
    meta = {
        "a_hash": array_digest(a.entries),
        "c_hash": array_digest(c),
        "sigma_obs": 0.0,
        "basis": basis.to_dict(),
    }
    return TrajectoryData(states=states, dt=spec.dt, spec=spec, meta=meta)


def add_observation_noise(data: TrajectoryData, sigma_obs: float, seed: int) -> TrajectoryData:
    """Add i.i.d. N(0, sigma_obs²) to every state entry."""
    if sigma_obs < 0:
        raise NonFiniteInputError(f"Invalid sigma_obs={sigma_obs}. Must be >= 0")
    meta = dict(data.meta)
    meta["sigma_obs"] = float(sigma_obs)
    if sigma_obs == 0:
        return TrajectoryData(data.states.copy(), data.dt, data.spec, meta)
    rng = trajectory_rng(seed, 0, OBS_STREAM)
    noisy = data.states + sigma_obs * rng.standard_normal(data.states.shape)
    return TrajectoryData(noisy, data.dt, data.spec, meta)
