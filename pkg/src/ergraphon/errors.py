"""Exception hierarchy shared across the package."""


class ErgraphonError(Exception):
    """Base class for all package errors."""


class DomainError(ErgraphonError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EpsilonTooLargeError(DomainError):
    """A perturbation amplitude pushes block values outside [0, 1]."""


class InfeasibleError(ErgraphonError):
    """The requested constraint target is unreachable for the given family."""


class CapacityError(ErgraphonError):
    """The request exceeds the exact-enumeration capacity limits."""


class ConvergenceError(ErgraphonError):
    """An iterative procedure failed to converge; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
