"""Exception types shared across the package."""


class HeislabError(Exception):
    """Base class for package errors."""


class DimensionMismatch(HeislabError, ValueError):
    """Operands live on Heisenberg groups with different n."""


class DomainError(HeislabError, ValueError):
    """Evaluation requested outside an operation's domain."""


class ParameterError(HeislabError, ValueError):
    """A parameter violates its documented constraint."""


class SolverFailure(HeislabError, RuntimeError):
    """Iterative linear solve did not converge."""


class OperatorError(HeislabError, RuntimeError):
    """Operator lacks a property the solver requires."""
