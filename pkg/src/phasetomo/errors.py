"""Exception hierarchy. Each class carries the CLI exit code for its failure class."""


class PhasetomoError(Exception):
    exit_code = 1


class DomainError(PhasetomoError, ValueError):
    """Argument outside the documented domain of an operation."""

    exit_code = 2


class ValidationError(PhasetomoError):
    exit_code = 2


class DegenerateTruncationError(DomainError):
    pass


class CoverageError(PhasetomoError):
    exit_code = 3

    def __init__(self, message, missing=None):
        super().__init__(message)
        self.missing = list(missing or [])


class EstimationError(PhasetomoError):
    exit_code = 4


class IllConditionedFitError(EstimationError):
    pass


class SingularSystemError(PhasetomoError, ArithmeticError):
    exit_code = 5

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class ContractError(PhasetomoError, AssertionError):
    """Internal contract violated (e.g. a non-unit diagonal fed to the unit-diagonal inverse)."""


class ConsistencyError(PhasetomoError, ArithmeticError):
    """A quantity that must be real came out with a non-negligible imaginary part."""
