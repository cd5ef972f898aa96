"""Exception types shared across the package."""


class ClusterkitError(Exception):
    """Base class for all clusterkit errors."""


class InvalidParameterError(ClusterkitError, ValueError):
    """A constructor or operation received an out-of-domain argument."""


class ContractViolationError(ClusterkitError):
    """An internal invariant was violated (e.g. nonzero constant term fed to exp)."""


class OutOfRangeError(ClusterkitError, IndexError):
    """Requested index lies outside the stored truncation order."""


class SizeLimitError(ClusterkitError):
    """Brute-force enumeration or DP budget exceeded."""


class DivergenceError(ClusterkitError):
    """A series was evaluated at or beyond its radius of convergence."""


class UnreachableTargetError(ClusterkitError):
    """The saddle equation has no root in the admissible radius interval."""


class UnsupportedOrderError(ClusterkitError):
    """Moment order not covered by the implemented asymptotics."""


class RejectionBudgetError(ClusterkitError):
    """Rejection sampler exhausted its retry budget (consider the exact DP sampler)."""


class ScopeError(ClusterkitError):
    """Requested combination of model and weights lies outside the supported scope."""
