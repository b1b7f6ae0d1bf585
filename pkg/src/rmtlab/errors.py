"""Exception hierarchy for rmtlab.

Every failure mode raised by the package derives from :class:`RmtlabError`,
so callers can blanket-catch library errors while still letting genuine
programming mistakes (TypeError and friends) propagate.
"""

__all__ = [
    "RmtlabError",
    "InvalidParameterError",
    "PreconditionError",
    "NumericalBackendError",
    "ConvergenceError",
    "StabilityError",
    "SingularityError",
    "AccuracyError",
    "OutOfMassError",
    "CollisionError",
    "StepFailureError",
    "ReplicaFailureError",
]


class RmtlabError(Exception):
    """Base class for all rmtlab errors."""


class InvalidParameterError(RmtlabError, ValueError):
    """An argument is outside the documented domain of an operation."""


class PreconditionError(RmtlabError, ValueError):
    """A structural precondition is violated (e.g. missing vector frames)."""


class NumericalBackendError(RmtlabError, RuntimeError):
    """A dense linear-algebra routine failed or returned inconsistent output."""


class ConvergenceError(RmtlabError, RuntimeError):
    """An iterative solver did not reach its target residual."""


class StabilityError(RmtlabError, RuntimeError):
    """A stability operator is singular to working precision."""


class SingularityError(RmtlabError, ValueError):
    """Evaluation requested at (or too close to) a genuine singularity."""


class AccuracyError(RmtlabError, RuntimeError):
    """A quadrature or fit did not reach the requested accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class OutOfMassError(RmtlabError, ValueError):
    """A quantile request exceeds the available probability mass."""


class CollisionError(RmtlabError, RuntimeError):
    """Particle positions coincide where strict ordering is required."""


class StepFailureError(RmtlabError, RuntimeError):
    """An SDE step could not be completed within the sub-step budget."""

    def __init__(self, message, gap=None, index=None):
        super().__init__(message)
        self.gap = gap
        self.index = index


class ReplicaFailureError(RmtlabError, RuntimeError):
    """Too large a fraction of Monte Carlo replicas failed to compute."""

    def __init__(self, message, failed=None, total=None):
        super().__init__(message)
        self.failed = failed
        self.total = total
