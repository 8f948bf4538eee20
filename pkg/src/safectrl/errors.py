"""Exception types shared across the package."""


class SafectrlError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SafectrlError):
    pass


class NoiseBoundViolated(SafectrlError):
    pass


class InvalidParams(SafectrlError):
    pass


class UnknownFamily(SafectrlError):
    pass


class InfeasibleSafeSet(SafectrlError):
    """The safe gain set is empty; the run must abort, never relax constraints."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ZeroNormal(SafectrlError):
    pass


class SvdFailure(SafectrlError):
    pass


class ProjectionDidNotConverge(SafectrlError):
    pass


class ConvergenceFailure(SafectrlError):
    pass


class NegativeZeta(SafectrlError):
    pass


class ParseError(SafectrlError):
    pass


class ValidationError(SafectrlError):
    pass
