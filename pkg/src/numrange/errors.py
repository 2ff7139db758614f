"""Exception types shared across the package."""


class NumrangeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(NumrangeError):
    """Operands have incompatible dimensions."""


class NotHermitian(NumrangeError):
    """A matrix required to be Hermitian is not, beyond tolerance."""


class RankDeficient(NumrangeError):
    """Vectors handed to an orthonormalization are numerically dependent."""


class OutsideRange(NumrangeError):
    """A target point lies outside the relevant (essential) numerical range."""


class NumericalBreakdown(NumrangeError):
    """An iterative construction stalled; should not happen for well-posed input."""


class ExhaustedTail(NumrangeError):
    """The materialized tail of an operator model is too short for the request."""


class BadSignConfiguration(NumrangeError):
    """The extension construction needs endpoints straddling zero."""


class DegeneratePair(NumrangeError):
    """Two scalars that must differ coincide."""


class EndpointNotAttained(NumrangeError):
    """A segment endpoint fed to a convexity probe is not attained."""


class OutOfRangeEntry(NumrangeError):
    """A diagonal sequence entry falls outside [0, 1]."""


class IncompatibleStreams(NumrangeError):
    """Two diagonal sequences cannot be combined entrywise in closed form."""


class NotADiagonal(NumrangeError):
    """An operation requires sequences that pass the projection-diagonal test."""


class InputFormatError(NumrangeError):
    """A JSON document does not match the expected schema."""
