"""Named bases and true kernels of the reference experiments."""

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from netkernel.core.basis import (
    BasisKind,
    BasisSpec,
    DampedSine,
    Indicator,
    Polynomial,
    PowerLawTruncated,
    Spline,
    Trig,
)
from netkernel.core.errors import ConfigError, DimensionMismatchError
from netkernel.core.utils.logging import get_logger

logger = get_logger(__name__)

LJ_CUTOFF = 0.5
LJ_CUTOFF_VALUE = -160.0
LJ_TRUE_COEFFICIENTS = (-1.0 / 3.0, 4.0 / 3.0, LJ_CUTOFF_VALUE)
LJ_TRUE_INDICES = (0, 3, 6)

RANDOM_FOURIER_SHIFT = 0.1
SPLINE_RANGE = (0.0, 5.0)
SPLINE_DEGREE = 3


@dataclass(frozen=True, eq=False)
class KernelPreset:
    """A true kernel on ``basis``: coef is a vector, or a (p, Q) matrix with one column per agent type."""

    name: str
    basis: BasisSpec
    coef: np.ndarray

    @property
    def types(self) -> int:
        return 1 if self.coef.ndim == 1 else self.coef.shape[1]

    def coefficients_for(self, types: Optional[Sequence[int]] = None) -> np.ndarray:
        """Vector c for single-type kernels; per-agent matrix coef[:, types] otherwise."""
        if self.coef.ndim == 1:
            return self.coef
        if types is None:
            raise ConfigError(f"Kernel preset '{self.name}' has {self.types} types; agent types are required")
        return self.coef[:, np.asarray(types, dtype=int)]


# Bases


def lennard_jones_basis(d: int = 2, p: int = 10) -> BasisSpec:
    """x⁻⁹ and x⁻³ truncated to [0.5 + 0.25k, ∞) for k < 3, then indicators of [0, 0.5 + 0.25k) for k < 4.

    ``p=7`` keeps the first indicator only and ``p=3`` keeps the three functions carrying the true kernel.
    """
    functions = [PowerLawTruncated(-9.0, (0.5 + 0.25 * k, None)) for k in range(3)]
    functions += [PowerLawTruncated(-3.0, (0.5 + 0.25 * k, None)) for k in range(3)]
    functions += [Indicator((0.0, 0.5 + 0.25 * k)) for k in range(4)]
    names = [f"r^-9 on [{0.5 + 0.25 * k:g},inf)" for k in range(3)]
    names += [f"r^-3 on [{0.5 + 0.25 * k:g},inf)" for k in range(3)]
    names += [f"1 on [0,{0.5 + 0.25 * k:g})" for k in range(4)]
    full = BasisSpec(d, BasisKind.RADIAL_LIFT, tuple(functions), names=tuple(names))
    if p == 10:
        return full
    if p == 7:
        return full.subset(range(7))
    if p == 3:
        return full.subset(LJ_TRUE_INDICES)
    raise ConfigError(f"Invalid Lennard-Jones basis size p={p}. Must be one of [3, 7, 10]")


def random_fourier_basis(d: int = 1, p: int = 16) -> BasisSpec:
    functions = tuple(DampedSine(k, RANDOM_FOURIER_SHIFT) for k in range(1, p + 1))
    names = tuple(f"sin(2pi*{k}r)/(r+0.1)" for k in range(1, p + 1))
    return BasisSpec(d, BasisKind.RADIAL_LIFT, functions, names=names)


def kuramoto_basis(include_truth: bool = False) -> BasisSpec:
    """span{cos x, sin 2x, cos 2x, …, sin 7x, cos 7x}, plus sin x when ``include_truth``."""
    functions = [Trig("cos", 1)]
    for k in range(2, 8):
        functions += [Trig("sin", k), Trig("cos", k)]
    if include_truth:
        functions.append(Trig("sin", 1))
    names = tuple(f"{fn.trig}({fn.frequency}x)" for fn in functions)
    return BasisSpec(1, BasisKind.DIRECT_SCALAR, tuple(functions), names=names)


def leader_follower_basis(d: int = 1) -> BasisSpec:
    functions = (Indicator((0.0, 1.0)), Indicator((1.0, 1.5)))
    return BasisSpec(d, BasisKind.RADIAL_LIFT, functions, names=("1 on [0,1)", "1 on [1,1.5)"))


def spline_basis(d: int = 2, p: int = 8, support: Sequence[float] = SPLINE_RANGE) -> BasisSpec:
    """Clamped cubic B-splines on ``support``, one descriptor per basis element."""
    if p < SPLINE_DEGREE + 1:
        raise ConfigError(f"Invalid spline basis size p={p}. Must be >= {SPLINE_DEGREE + 1}")
    lo, hi = support
    interior = np.linspace(lo, hi, p - SPLINE_DEGREE + 1)
    knots = np.concatenate([[lo] * SPLINE_DEGREE, interior, [hi] * SPLINE_DEGREE])
    functions = tuple(Spline(tuple(knots), tuple(np.eye(p)[k])) for k in range(p))
    return BasisSpec(d, BasisKind.RADIAL_LIFT, functions, names=tuple(f"B{k}" for k in range(p)))


def greville_abscissae(basis: BasisSpec) -> np.ndarray:
    """Knot averages of a spline basis; spline coefficients sampled there approximate a target profile."""
    knots = np.asarray(basis.functions[0].knots)
    return np.array([knots[k + 1 : k + SPLINE_DEGREE + 1].mean() for k in range(basis.p)])


def rip_fourier_basis() -> BasisSpec:
    return BasisSpec(1, BasisKind.DIRECT_SCALAR, (Trig("sin", 1), Trig("cos", 1)), names=("sin(x)", "cos(x)"))


def rip_hermite_basis() -> BasisSpec:
    functions = (Polynomial((3.0, 0.0, -6.0, 0.0, 1.0)), Polynomial((0.0, 15.0, 0.0, -10.0, 0.0, 1.0)))
    return BasisSpec(1, BasisKind.DIRECT_SCALAR, functions, names=("x^4-6x^2+3", "x^5-10x^3+15x"))


def rip_lj_basis() -> BasisSpec:
    functions = (PowerLawTruncated(-9.0, (0.75, None)), PowerLawTruncated(-3.0, (0.25, None)))
    return BasisSpec(1, BasisKind.DIRECT_SCALAR, functions, names=("x^-9 on [0.75,inf)", "x^-3 on [0.25,inf)"))


def _fixed_dim(builder: Callable[[], BasisSpec]) -> Callable[[int, Optional[int]], BasisSpec]:
    def build(d: int, p: Optional[int]) -> BasisSpec:
        if d != 1:
            raise DimensionMismatchError(f"This basis is defined for d=1 only, got d={d}")
        return builder()

    return build


BASIS_PRESETS: Dict[str, Callable[[int, Optional[int]], BasisSpec]] = {
    "lj10": lambda d, p: lennard_jones_basis(d, 10),
    "lj7": lambda d, p: lennard_jones_basis(d, 7),
    "lj3": lambda d, p: lennard_jones_basis(d, 3),
    "random_fourier": lambda d, p: random_fourier_basis(d, p or 16),
    "kuramoto_h": _fixed_dim(lambda: kuramoto_basis(False)),
    "kuramoto_h_phi": _fixed_dim(lambda: kuramoto_basis(True)),
    "leader_follower": lambda d, p: leader_follower_basis(d),
    "multitype_spline": lambda d, p: spline_basis(d, p or 8),
    "rip_fourier": _fixed_dim(rip_fourier_basis),
    "rip_hermite": _fixed_dim(rip_hermite_basis),
    "rip_lj": _fixed_dim(rip_lj_basis),
}


def basis_preset(name: str, d: int = 1, p: Optional[int] = None) -> BasisSpec:
    if name not in BASIS_PRESETS:
        raise ConfigError(f"Basis preset '{name}' not found. Available presets: {sorted(BASIS_PRESETS)}", name=name)
    return BASIS_PRESETS[name](d, p)


# True kernels


def lennard_jones_kernel(d: int = 2) -> KernelPreset:
    """φ(r) = −r⁻⁹/3 + 4r⁻³/3 for r ≥ 0.5, −160 below."""
    return KernelPreset("lj", lennard_jones_basis(d, 3), np.array(LJ_TRUE_COEFFICIENTS))


def random_fourier_kernel(d: int = 1, p: int = 16, seed: int = 0) -> KernelPreset:
    """φ(r) = Σ_k w_k/k·sin(2πkr)/(r + 0.1) with w_k ~ N(0, 1)."""
    w = np.random.default_rng(seed).standard_normal(p)
    return KernelPreset("random_fourier", random_fourier_basis(d, p), w / np.arange(1, p + 1))


def kuramoto_kernel(coupling: float = 1.0) -> KernelPreset:
    """Φ(x) = κ·sin(x)."""
    truth = BasisSpec(1, BasisKind.DIRECT_SCALAR, (Trig("sin", 1),), names=("sin(x)",))
    return KernelPreset("kuramoto", truth, np.array([coupling]))


def leader_follower_kernel(d: int = 1) -> KernelPreset:
    """Φ = −1{|x| < 1} − 0.1·1{1 ≤ |x| < 1.5} along x/|x|."""
    return KernelPreset("leader_follower", leader_follower_basis(d), np.array([-1.0, -0.1]))


def short_range_profile(r: np.ndarray) -> np.ndarray:
    return 2.0 * np.exp(-3.0 * r) - 0.5 * np.exp(-r)


def long_range_profile(r: np.ndarray) -> np.ndarray:
    return -0.4 * (1.0 - np.exp(-r))


def multitype_kernel(d: int = 2, p: int = 8, types: int = 2) -> KernelPreset:
    """Short-range (type 0) and long-range (type 1) spline kernels on [0, 5]."""
    if types not in (1, 2):
        raise ConfigError(f"Invalid number of kernel types {types}. Must be 1 or 2")
    basis = spline_basis(d, p)
    nodes = greville_abscissae(basis)
    columns = [short_range_profile(nodes), long_range_profile(nodes)][:types]
    coef = columns[0] if types == 1 else np.stack(columns, axis=1)
    return KernelPreset("multitype", basis, coef)


def agent_types(N: int, Q: int, seed: int) -> np.ndarray:
    """Balanced random type assignment; every type gets at least one agent."""
    if not 1 <= Q <= N:
        raise ConfigError(f"Invalid number of types Q={Q} for N={N}")
    labels = np.arange(N) % Q
    return np.random.default_rng(seed).permutation(labels)


KERNEL_PRESETS: Dict[str, Callable[[int, Optional[int], int, int], KernelPreset]] = {
    "lj": lambda d, p, seed, types: lennard_jones_kernel(d),
    "random_fourier": lambda d, p, seed, types: random_fourier_kernel(d, p or 16, seed),
    "kuramoto": lambda d, p, seed, types: kuramoto_kernel(),
    "leader_follower": lambda d, p, seed, types: leader_follower_kernel(d),
    "multitype": lambda d, p, seed, types: multitype_kernel(d, p or 8, types),
}


def kernel_preset(name: str, d: int = 1, p: Optional[int] = None, seed: int = 0, types: int = 1) -> KernelPreset:
    if name not in KERNEL_PRESETS:
        raise ConfigError(f"Kernel preset '{name}' not found. Available presets: {sorted(KERNEL_PRESETS)}", name=name)
    preset = KERNEL_PRESETS[name](d, p, seed, types)
    if preset.basis.dim_d != d:
        raise DimensionMismatchError(f"Kernel preset '{name}' is defined for d={preset.basis.dim_d}, got d={d}")
    return preset
