"""Exception hierarchy shared by all modules.

Each class maps to one CLI exit code (see ``cubicpulse.cli``).
"""


class CubicPulseError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgument(CubicPulseError, ValueError):
    pass


class FitFailure(CubicPulseError):
    """A least-squares system could not be solved (degenerate segment)."""

    def __init__(self, message: str, segment: int | None = None):
        super().__init__(message)
        self.segment = segment


class RangeError(CubicPulseError, OverflowError):
    """A coefficient does not fit into its fixed-point field."""

    def __init__(self, message: str, coefficient: str | None = None):
        super().__init__(message)
        self.coefficient = coefficient


class AccumulatorOverflow(CubicPulseError, OverflowError):
    """An accumulator left its container during emulation."""

    def __init__(self, message: str, segment: int, sample: int):
        super().__init__(message)
        self.segment = segment
        self.sample = sample


class FormatError(CubicPulseError):
    """Malformed input file (.cps, CSV, JSON config)."""


class IntegratorFailure(CubicPulseError):
    """State norm drifted beyond tolerance during time evolution."""


class UndefinedState(CubicPulseError, ValueError):
    pass
