class VardesignError(Exception):
    pass


class DomainError(VardesignError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class AssumptionError(VardesignError, ValueError):
    """A design assumption (C1/C2, A1, A2, A3, ...) does not hold.

    ``clause`` names the failing condition so callers can report it.
    """

    def __init__(self, message, clause=None):
        super().__init__(message)
        self.clause = clause


class ConfigError(VardesignError, ValueError):
    pass


class NumericalError(VardesignError, RuntimeError):
    """Quadrature, root-finding or factorization failed to converge."""
