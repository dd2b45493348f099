"""Exception taxonomy shared across the toolkit.

Two broad families matter for callers: malformed inputs (``ValidationError``,
``DomainError``) and requests that are well-formed but mathematically
unsatisfiable (``InfeasibilityError``, ``ValidityError``).  The CLI maps the
first family to exit code 1 and the second to exit code 2.
"""


class HtcError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(HtcError):
    """Malformed data: bad shapes, non-finite values, empty requests."""


class DomainError(HtcError):
    """Parameter outside the mathematical domain of an operation."""


class InsufficientDataError(ValidationError):
    """Not enough samples to carry out an estimate."""


class InfeasibilityError(HtcError):
    """No solution exists for the requested error/probability targets."""


class InfeasibleThresholdError(InfeasibilityError):
    """Requested cutoff is too large for the error budget.

    Carries the largest cutoff that would have been feasible.
    """

    def __init__(self, message: str, max_feasible_tau: float):
        super().__init__(message)
        self.max_feasible_tau = max_feasible_tau


class ValidityError(HtcError):
    """Inputs fall outside the region where a bound statement holds."""


class TrainingDivergedError(HtcError):
    """Loss became non-finite during optimization."""
