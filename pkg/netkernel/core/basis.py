"""Basis descriptors and basis specifications.

A descriptor is a scalar profile ψ̃(r). A :class:`BasisSpec` lifts the profiles to vector fields on
R^d, either radially (ψ̃(|x|)·x/|x|) or directly on scalar states (d = 1).
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, ClassVar, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.interpolate import BSpline

from netkernel.core.errors import ConfigError, DimensionMismatchError, UnknownDescriptorError
from netkernel.core.utils.logging import get_logger

logger = get_logger(__name__)

Interval = Tuple[float, float]


def _interval(support: Sequence[Optional[float]]) -> Interval:
    lo, hi = support
    lo = -math.inf if lo is None else float(lo)
    hi = math.inf if hi is None else float(hi)
    if not lo < hi:
        raise ConfigError(f"Invalid support [{lo}, {hi})")
    return lo, hi


def _interval_to_json(support: Interval) -> List[Optional[float]]:
    return [None if math.isinf(v) else v for v in support]


def _in_support(r: np.ndarray, support: Interval) -> np.ndarray:
    # Half-open [lo, hi)
    return (r >= support[0]) & (r < support[1])


class Descriptor:
    """Scalar basis profile ψ̃: R -> R, vectorised over arrays."""

    kind: ClassVar[str] = ""

    def __call__(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLawTruncated(Descriptor):
    exponent: float
    support: Interval = (0.0, math.inf)
    kind: ClassVar[str] = "power_law_truncated"

    def __post_init__(self):
        object.__setattr__(self, "support", _interval(self.support))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        mask = _in_support(r, self.support) & (r != 0)
        out[mask] = r[mask] ** self.exponent
        return out

    def to_dict(self):
        return {"kind": self.kind, "exponent": self.exponent, "support": _interval_to_json(self.support)}


@dataclass(frozen=True)
class Indicator(Descriptor):
    support: Interval = (0.0, math.inf)
    kind: ClassVar[str] = "indicator"

    def __post_init__(self):
        object.__setattr__(self, "support", _interval(self.support))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return _in_support(r, self.support).astype(float)

    def to_dict(self):
        return {"kind": self.kind, "support": _interval_to_json(self.support)}


@dataclass(frozen=True)
class Trig(Descriptor):
    """sin(frequency·r) or cos(frequency·r)."""

    trig: str
    frequency: int = 1

    def __post_init__(self):
        if self.trig not in ("sin", "cos"):
            raise ConfigError(f"Invalid trig kind '{self.trig}'. Must be one of: ['sin', 'cos']")

    @property
    def kind(self) -> str:  # type: ignore[override]
        return self.trig

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.sin(self.frequency * r) if self.trig == "sin" else np.cos(self.frequency * r)

    def to_dict(self):
        return {"kind": self.trig, "frequency": self.frequency}


@dataclass(frozen=True)
class Spline(Descriptor):
    """B-spline with knot vector ``knots`` and coefficients ``coefs``; zero outside the base interval."""

    knots: Tuple[float, ...]
    coefs: Tuple[float, ...]
    kind: ClassVar[str] = "spline"

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple(float(t) for t in self.knots))
        object.__setattr__(self, "coefs", tuple(float(c) for c in self.coefs))
        if self.degree < 0:
            raise ConfigError(f"Spline needs more knots than coefficients, got {len(self.knots)} and {len(self.coefs)}")

    @property
    def degree(self) -> int:
        return len(self.knots) - len(self.coefs) - 1

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        spline = BSpline(np.array(self.knots), np.array(self.coefs), self.degree, extrapolate=False)
        return np.nan_to_num(spline(r), nan=0.0)

    def to_dict(self):
        return {"kind": self.kind, "knots": list(self.knots), "coefs": list(self.coefs)}


@dataclass(frozen=True)
class Tabulated(Descriptor):
    """Piecewise-linear interpolation of (grid, values); zero outside the grid."""

    grid: Tuple[float, ...]
    values: Tuple[float, ...]
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(t) for t in self.grid))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.grid) != len(self.values) or len(self.grid) < 2:
            raise ConfigError("Tabulated descriptor needs matching grid/values of length >= 2")
        if np.any(np.diff(self.grid) <= 0):
            raise ConfigError("Tabulated grid must be strictly increasing")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.interp(r, self.grid, self.values, left=0.0, right=0.0)

    def to_dict(self):
        return {"kind": self.kind, "grid": list(self.grid), "values": list(self.values)}


@dataclass(frozen=True)
class Polynomial(Descriptor):
    """Σ coefs[n]·r^n (ascending powers)."""

    coefs: Tuple[float, ...]
    kind: ClassVar[str] = "polynomial"

    def __post_init__(self):
        object.__setattr__(self, "coefs", tuple(float(c) for c in self.coefs))

    def __call__(self, r):
        return npoly.polyval(np.asarray(r, dtype=float), self.coefs)

    def to_dict(self):
        return {"kind": self.kind, "coefs": list(self.coefs)}


@dataclass(frozen=True)
class DampedSine(Descriptor):
    """sin(2π·frequency·r) / (r + shift)."""

    frequency: int
    shift: float = 0.1
    kind: ClassVar[str] = "damped_sine"

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.sin(2 * np.pi * self.frequency * r) / (r + self.shift)

    def to_dict(self):
        return {"kind": self.kind, "frequency": self.frequency, "shift": self.shift}


DESCRIPTORS: Dict[str, Type[Descriptor]] = {
    PowerLawTruncated.kind: PowerLawTruncated,
    Indicator.kind: Indicator,
    Spline.kind: Spline,
    Tabulated.kind: Tabulated,
    Polynomial.kind: Polynomial,
    DampedSine.kind: DampedSine,
}


def descriptor_from_dict(spec: Dict[str, Any]) -> Descriptor:
    """Build a descriptor from its JSON form."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind in ("sin", "cos"):
        return Trig(trig=kind, **spec)
    if kind not in DESCRIPTORS:
        raise UnknownDescriptorError(
            f"Descriptor kind '{kind}' not found. Available kinds: {sorted(list(DESCRIPTORS) + ['sin', 'cos'])}"
        )
    try:
        return DESCRIPTORS[kind](**spec)
    except TypeError as e:
        raise ConfigError(f"Invalid fields for descriptor '{kind}': {e}") from e


class BasisKind(str, Enum):
    RADIAL_LIFT = "radial_lift"
    DIRECT_SCALAR = "direct_scalar"


@dataclass(frozen=True)
class BasisSpec:
    """Basis {ψ_k} on R^d.

    RadialLift maps x to ψ̃_k(|x|)·x/|x| and returns zero when |x| <= ``singular_cutoff``; DirectScalar
    evaluates ψ̃_k(x) on scalar states.
    """

    dim_d: int
    kind: BasisKind
    functions: Tuple[Descriptor, ...]
    singular_cutoff: float = 1e-14
    names: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", BasisKind(self.kind))
        object.__setattr__(self, "functions", tuple(self.functions))
        if self.dim_d < 1:
            raise ConfigError(f"Invalid dimension {self.dim_d}. Must be >= 1")
        if self.kind == BasisKind.DIRECT_SCALAR and self.dim_d != 1:
            raise ConfigError("DirectScalar bases require dim_d = 1")
        if not self.functions:
            raise ConfigError("A basis needs at least one function")
        if not self.singular_cutoff > 0:
            raise ConfigError("singular_cutoff must be > 0")

    @property
    def p(self) -> int:
        return len(self.functions)

    def profiles(self, r: np.ndarray) -> np.ndarray:
        """Scalar profiles ψ̃_k(r) stacked on a trailing axis of size p."""
        r = np.asarray(r, dtype=float)
        return np.stack([fn(r) for fn in self.functions], axis=-1)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Vector features ψ_k(x) for x of shape (..., d); returns shape (..., d, p)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim_d,):
            raise DimensionMismatchError(f"Expected trailing dimension {self.dim_d}, got shape {x.shape}")
        if self.kind == BasisKind.DIRECT_SCALAR:
            return self.profiles(x[..., 0])[..., None, :]
        norm = np.linalg.norm(x, axis=-1)
        active = norm > self.singular_cutoff
        safe = np.where(active, norm, 1.0)
        unit = np.where(active[..., None], x / safe[..., None], 0.0)
        return unit[..., :, None] * self.profiles(norm)[..., None, :]

    def subset(self, indices: Sequence[int]) -> "BasisSpec":
        names = tuple(self.names[i] for i in indices) if self.names else ()
        return BasisSpec(self.dim_d, self.kind, tuple(self.functions[i] for i in indices), self.singular_cutoff, names)

    def with_dim(self, dim_d: int) -> "BasisSpec":
        return BasisSpec(dim_d, self.kind, self.functions, self.singular_cutoff, self.names)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim_d": self.dim_d,
            "kind": self.kind.value,
            "singular_cutoff": self.singular_cutoff,
            "functions": [fn.to_dict() for fn in self.functions],
        }

    @classmethod
    def from_dict(cls, spec: Dict[str, Any]) -> "BasisSpec":
        try:
            functions = tuple(descriptor_from_dict(fn) for fn in spec["functions"])
            return cls(
                dim_d=int(spec["dim_d"]),
                kind=BasisKind(spec.get("kind", BasisKind.RADIAL_LIFT.value)),
                functions=functions,
                singular_cutoff=float(spec.get("singular_cutoff", 1e-14)),
            )
        except KeyError as e:
            raise ConfigError(f"Basis specification is missing key {e}") from e
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Invalid basis specification: {e}") from e
