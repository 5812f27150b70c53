"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An input violates a documented precondition or invariant."""


class MembershipError(ContractViolation):
    """Operator rejected from the admissible point-operator set.

    Carries the offending eigenvalue signature so callers can report why.
    """

    def __init__(self, message, signature=None, rank=None):
        super().__init__(message)
        self.signature = signature
        self.rank = rank


class NumericalFailure(RuntimeError):
    """A numerical routine failed to converge within bounded effort."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InstabilityError(NumericalFailure):
    """Time integration blew up; carries diagnostics of the failing state."""

    def __init__(self, message, tau=None, norms=None):
        super().__init__(message)
        self.tau = tau
        self.norms = norms


class FeasibilityError(ValueError):
    """Optimization targets cannot be met by any admissible measure."""


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class UnsupportedExpressionError(ValueError):
    """Expression outside the supported trace-polynomial grammar."""
