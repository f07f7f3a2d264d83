"""Exception hierarchy shared by every layer of the package."""


class TelepathyError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TelepathyError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ContractViolation(TelepathyError):
    """A precondition on a mathematical object does not hold.

    Raised for example when a non-unitary matrix is applied as evolution or
    when a measurement family fails the completeness equation.
    """


class EvaluationError(TelepathyError):
    """A specification could not be evaluated at a given prestate."""


class UndefinedConditional(EvaluationError):
    """Conditioning on evidence of probability zero."""


class LocalityViolation(TelepathyError):
    """A party touched qubits or variables it does not own."""


class VacuousPromise(TelepathyError, ValueError):
    """No input tuple satisfies the promise of a game."""


class SearchRefused(TelepathyError):
    """An exhaustive search would exceed its strategy-count cap."""
