"""Exception hierarchy.

Everything raised on purpose derives from :class:`HelarsError`.  Numerical
failures derive from :class:`NumericalError` (CLI exit code 1); bad input
derives from :class:`InputError` (CLI exit code 2).
"""


class HelarsError(Exception):
    """Base class for all package errors."""


class NumericalError(HelarsError):
    pass


class InputError(HelarsError):
    pass


class DomainViolation(NumericalError):
    """A natural parameter left the model domain (last coordinate must be < 0)."""


class NonFiniteDerivative(NumericalError):
    """The derivative field produced inf/nan at an accepted state."""


class StepLimitExceeded(NumericalError):
    pass


class SingularBlock(NumericalError):
    """The d eta_J / d theta^J block is numerically singular."""


class SingularHessian(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class DegenerateMoments(NumericalError):
    pass


class MaskViolation(NumericalError):
    """A point has a non-zero theta entry on a covariate outside the active set."""


class BracketingFailure(NumericalError):
    pass


class MonotonicityViolation(NumericalError):
    """Divergence was not monotone along the projection family during bisection."""


class ToleranceNotMet(NumericalError):
    pass


class ParseError(InputError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class NonPositiveResponse(InputError):
    def __init__(self, rows):
        self.rows = list(rows)
        shown = ", ".join(str(r) for r in self.rows[:10])
        more = "" if len(self.rows) <= 10 else f" (+{len(self.rows) - 10} more)"
        super().__init__(f"truncated-normal model needs y > 0; offending rows: {shown}{more}")


class ZeroVariance(InputError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} has zero variance")
