"""Exception types shared across the package."""


class IceboxError(Exception):
    """Base class for all package errors."""


class IceRuleViolation(IceboxError):
    """A vertex does not have exactly two incoming (half-)edges."""

    def __init__(self, vertex, in_degree=None):
        self.vertex = vertex
        self.in_degree = in_degree
        msg = f"ice rule violated at vertex {vertex}"
        if in_degree is not None:
            msg += f" (in-degree {in_degree})"
        super().__init__(msg)


class NotIrreducible(IceboxError):
    """Glauber dynamics was requested on a periodic region."""


class BudgetExceeded(IceboxError):
    """An exhaustive computation would exceed the configured state budget."""


class InvalidWitness(IceboxError):
    """A path handed in as a fault line (or almost fault line) is not one."""


class NotAPartition(IceboxError):
    """Three state sets handed to the conductance recipe do not partition the space."""


class UnsupportedGeometry(IceboxError):
    """The operation is not defined for this boundary condition or size."""
