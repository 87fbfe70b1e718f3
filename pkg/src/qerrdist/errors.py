"""Exception and warning types."""

__all__ = [
    "QerrdistError",
    "ShapeError",
    "ValidationError",
    "NumericalError",
    "NonConvergenceError",
    "TruncationError",
    "TruncationWarning",
    "GridError",
    "IllConditionedError",
    "PreconditionError",
    "FamilyConditionError",
    "ConfigError",
]


class QerrdistError(Exception):
    """Base class for package errors."""


class ShapeError(QerrdistError, ValueError):
    """Operands have incompatible shapes."""


class ValidationError(QerrdistError, ValueError):
    """An operator or state violates its defining invariant."""


class NumericalError(QerrdistError, ArithmeticError):
    """A quantity fell outside its numerically admissible range."""


class NonConvergenceError(NumericalError):
    """An iterative numerical routine failed to converge."""


class TruncationError(QerrdistError, ValueError):
    """A state or operator does not fit in the Fock truncation."""


class TruncationWarning(UserWarning):
    """A state is close to the top of the Fock truncation."""


class GridError(QerrdistError, ValueError):
    """A sampling grid loses probability mass."""


class IllConditionedError(NumericalError):
    """A Gram matrix is too close to singular."""

    def __init__(self, message, condition_number):
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class PreconditionError(QerrdistError, ValueError):
    """Inputs fall outside the domain of a relation."""


class FamilyConditionError(PreconditionError):
    """A state family fails the closure condition required by a verifier."""


class ConfigError(QerrdistError, ValueError):
    """Invalid run configuration."""
