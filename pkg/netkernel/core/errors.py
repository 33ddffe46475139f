"""Exception hierarchy shared by the library and the command-line harness.

Every library error belongs to one of three categories, each mapped to a CLI exit code:
``ConfigError`` (2), ``DataError`` (3) and ``NumericalError`` (4).
"""

from typing import Any, Dict, Optional


class NetkernelError(Exception):
    """Base class for all netkernel errors."""

    category = "NetkernelError"
    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_record(self) -> Dict[str, Any]:
        """Machine-readable error record written to stderr by the CLI."""
        return {
            "error": type(self).__name__,
            "category": self.category,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": {key: _jsonable(value) for key, value in self.details.items()},
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return str(value)


class ConfigError(NetkernelError, ValueError):
    category = "ConfigError"
    exit_code = 2


class DataError(NetkernelError, ValueError):
    category = "DataError"
    exit_code = 3


class NumericalError(NetkernelError, ArithmeticError):
    category = "NumericalError"
    exit_code = 4


# Configuration errors
class DegreeOutOfRangeError(ConfigError):
    pass


class RegularizerError(ConfigError):
    pass


class UnknownDescriptorError(ConfigError):
    pass


class UnknownExperimentError(ConfigError):
    pass


# Data errors
class NonFiniteInputError(DataError):
    pass


class DimensionMismatchError(DataError):
    pass


class ShapeMismatchError(DataError):
    pass


class EmptyMeasureError(DataError):
    pass


class TrajectoryFormatError(DataError):
    pass


# Numerical errors
class SingularSystemError(NumericalError):
    pass


class IterationLimitError(NumericalError):
    pass


class RankDeficientError(NumericalError):
    pass


class RankDeficientVError(RankDeficientError):
    """Type factor lost full column rank during three-fold ALS."""


class NonFiniteStateError(NumericalError):
    """Simulation blow-up; ``details`` carries the trajectory and step indices."""

    def __init__(self, message: str, trajectory: Optional[int] = None, step: Optional[int] = None, **details: Any):
        super().__init__(message, trajectory=trajectory, step=step, **details)
        self.trajectory = trajectory
        self.step = step


class ZeroCoefficientError(NumericalError):
    pass


class AllRowsDegenerateError(NumericalError):
    pass


class NonFiniteLossError(NumericalError):
    pass


class AllZeroError(NumericalError):
    pass


class DegenerateDenominatorError(NumericalError):
    pass


class ZeroTrueKernelError(NumericalError):
    pass


class NoLeadersError(NumericalError):
    pass
