"""Exception types raised across the package."""


class FrontsError(Exception):
    """Base class for all package errors."""


class BadParameter(FrontsError, ValueError):
    pass


class TailTooHeavy(BadParameter):
    """A kernel tail exponent is <= 2, so the first moment is infinite."""


class MomentDiverges(FrontsError):
    pass


class GridMismatch(FrontsError, ValueError):
    pass


class BlowUp(FrontsError):
    """The discrete solution left [0, 1]; the scheme is broken, not the PDE."""


class InsufficientData(FrontsError):
    pass


class NotApplicable(FrontsError):
    pass


class NoConvergence(FrontsError):
    """Wave solve failed. ``reason`` says why (iterations, negative inflow, ...)."""

    def __init__(self, message, reason="newton", iterations=None):
        super().__init__(message)
        self.reason = reason
        self.iterations = iterations


class NonMonotoneSolution(NoConvergence):
    def __init__(self, message, iterations=None):
        super().__init__(message, reason="non-monotone", iterations=iterations)


class ProbeFailed(FrontsError):
    pass


class RegimeMismatch(FrontsError):
    pass


class FitDegenerate(FrontsError):
    pass


class ConfigError(FrontsError):
    def __init__(self, message, key=None, line=None):
        parts = []
        if key is not None:
            parts.append(f"key {key}")
        if line is not None:
            parts.append(f"line {line}")
        where = f" [{', '.join(parts)}]" if parts else ""
        super().__init__(message + where)
        self.key = key
        self.line = line
