"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of a function."""


class ValidationError(ValueError):
    """A distribution or channel description violates one of its invariants."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge.

    ``detail`` carries whatever diagnostic state the failing routine had
    (last estimates, a solver trace, a best-effort result).
    """

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class CertificationError(NumericalError):
    """The solver could not certify optimality within its support budget."""
