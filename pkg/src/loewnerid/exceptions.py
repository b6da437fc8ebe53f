"""Exception types raised by :mod:`loewnerid`."""


class LoewnerIdError(Exception):
    """Base class for all errors raised by this package."""


class NumericalError(LoewnerIdError):
    """A computation failed for numerical reasons (singular solve, bad conditioning)."""


class ConfigError(LoewnerIdError, ValueError):
    """Invalid user-supplied configuration or arguments."""


# state space
class SingularPencil(NumericalError):
    """``s E - A`` is numerically singular at the requested point."""


class SingularE(NumericalError):
    """The descriptor matrix of a discrete model cannot be inverted."""


class AboveNyquist(ConfigError):
    """A frequency lies at or above the Nyquist frequency."""


class DimensionMismatch(ConfigError):
    """Matrix shapes are inconsistent with the model order."""


class ParseError(ConfigError):
    """A model or trace file could not be parsed."""


# loewner
class OddCount(ConfigError):
    """Interlacing split requested on an odd number of points."""


class CoincidentPoints(NumericalError):
    """A left and a right interpolation point coincide."""


class SingularLoewner(NumericalError):
    """The Loewner matrix is rank deficient."""


class EmptyData(ConfigError):
    """No measurements were supplied."""


class NotConjugateClosed(NumericalError):
    """A model could not be transformed into a real realization."""


# greedy
class GridExhausted(LoewnerIdError):
    """Every candidate frequency has already been measured."""


class DegenerateObjective(LoewnerIdError):
    """The masked selection objective vanishes on all candidates."""


class GridTooSmall(ConfigError):
    """The frequency grid has fewer points than requested."""


# time domain
class TraceTooShort(ConfigError):
    """A time trace is too short for the requested window."""


class ZeroInputComponent(NumericalError):
    """The input carries no energy at one of the excited frequencies."""


class IllConditioned(NumericalError):
    """The least-squares matrix is too ill-conditioned to trust."""
