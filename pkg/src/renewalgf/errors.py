"""Exception hierarchy shared by all modules."""


class RenewalGFError(Exception):
    """Base class for every error raised by this package."""


class DomainError(RenewalGFError, ValueError):
    """An argument lies outside the domain of the operation."""


class PoleError(RenewalGFError, ZeroDivisionError):
    """1 - f(theta) vanished where a reciprocal was requested."""

    def __init__(self, theta, message=None):
        self.theta = theta
        super().__init__(message or f"1 - f(theta) vanishes at theta={theta!r}")


class PreconditionError(RenewalGFError, ValueError):
    """A hypothesis required by a construction or check does not hold."""


class TailOverlapError(DomainError):
    """The omitted tail of a truncated sequence overlaps the requested cutoff."""


class RootError(RenewalGFError, RuntimeError):
    """A bracketing root search failed."""


class SubsequenceNotFound(PreconditionError):
    """No vanishing subsequence of epsilon was found in the scan range."""


class CertificationError(RenewalGFError, RuntimeError):
    """A certified postcondition failed."""


class PrecisionExhausted(RenewalGFError, RuntimeError):
    """A construction needs more working precision than configured.

    ``trace`` carries the partial construction built so far, ``stage`` the
    index of the stage that could not be completed.
    """

    def __init__(self, stage, message, trace=None):
        self.stage = stage
        self.trace = trace
        super().__init__(f"precision exhausted at stage {stage}: {message}")


class QuadratureError(RenewalGFError, RuntimeError):
    """An integral near a singular endpoint did not settle.

    ``level`` is the deepest dyadic level that was integrated.
    """

    def __init__(self, level, message):
        self.level = level
        super().__init__(f"quadrature failed at dyadic level {level}: {message}")
