"""Exception taxonomy shared by all extgeo modules.

Every error raised on purpose derives from ExtGeoError so callers (and the
CLI) can separate controlled failures from genuine bugs.
"""


class ExtGeoError(Exception):
    """Base class for all controlled extgeo failures."""


class DomainError(ExtGeoError):
    """An argument violates a documented precondition."""


class EvaluationError(ExtGeoError):
    """A jet operation failed (bad operand domain, or NaN/Inf appeared).

    Carries the name of the offending operation in ``op``.
    """

    def __init__(self, op, message):
        self.op = op
        super().__init__(f"{op}: {message}")


class ParseError(ExtGeoError):
    """Chart source text could not be parsed; carries line/column."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, col {col}: {message}"
        super().__init__(message)


class GeometryError(ExtGeoError):
    """A geometric consistency check failed (off-manifold point, degenerate
    immersion, and the like)."""


class SingularityError(GeometryError):
    """Operation undefined at the pole of the ambient radial field."""


class CriticalPointError(GeometryError):
    """Operation requires a non-critical point of the extrinsic distance."""


class DegeneratePlaneError(DomainError):
    """The supplied tangent plane is degenerate or unavailable."""


class TruncationError(DomainError):
    """A radius reaches past the trustworthy part of a truncated mesh."""


class HypothesisViolatedError(ExtGeoError):
    """A curvature or tameness hypothesis fails; carries offending samples."""

    def __init__(self, message, offenders=None):
        self.offenders = offenders or []
        super().__init__(message)


class ConfigError(ExtGeoError):
    """Run configuration is malformed (CLI exit code 2)."""
