"""Exception types raised by the library.

Degenerate Lyapunov values (``-inf``) are results, not errors; everything
here signals a violated precondition or a numerical failure.
"""


class LyapRankError(Exception):
    """Base class for all library errors."""


class ConfigError(LyapRankError):
    """Invalid user configuration (CLI exit code 2)."""


class NumericError(LyapRankError):
    """Numerical failure (CLI exit code 3)."""


class InvalidSubstitution(ConfigError):
    pass


class NotProlongable(InvalidSubstitution):
    pass


class NotGrowing(InvalidSubstitution):
    pass


class NotPrimitive(ConfigError):
    pass


class NoConvergence(NumericError):
    pass


class NotStochastic(ConfigError):
    pass


class ZeroMassOnSymbolZero(ConfigError):
    pass


class NoZeroSymbol(ConfigError):
    pass


class DecompositionFailure(NumericError):
    pass


class MissingFrequency(ConfigError):
    pass


class InvalidBFreeSet(ConfigError):
    pass


class PrecisionUnreachable(NumericError):
    pass


class TooManyFreePositions(ConfigError):
    pass


class Divergent(NumericError):
    pass


class MethodDisagreement(NumericError):
    pass


class NumericalBreakdown(NumericError):
    pass


class RankOneViolation(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class GridEmpty(ConfigError):
    pass
