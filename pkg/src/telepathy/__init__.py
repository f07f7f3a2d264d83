"""Exact verification of quantum pseudo-telepathy strategies."""

__version__ = "0.1.0"

from .classical import LocalStrategy, SearchResult, dj_coloring_search, exhaustive_search
from .errors import (
    ContractViolation,
    DomainError,
    EvaluationError,
    LocalityViolation,
    SearchRefused,
    TelepathyError,
    UndefinedConditional,
    VacuousPromise,
)
from .games import (
    GameSpec,
    QuantumStrategy,
    VerificationReport,
    bell_example,
    dj_game,
    mermin_game,
    parity_game,
    strategy_distribution,
    verify_winning,
)

__all__ = [
    "ContractViolation",
    "DomainError",
    "EvaluationError",
    "GameSpec",
    "LocalStrategy",
    "LocalityViolation",
    "QuantumStrategy",
    "SearchRefused",
    "SearchResult",
    "TelepathyError",
    "UndefinedConditional",
    "VacuousPromise",
    "VerificationReport",
    "__version__",
    "bell_example",
    "dj_coloring_search",
    "dj_game",
    "exhaustive_search",
    "mermin_game",
    "parity_game",
    "strategy_distribution",
    "verify_winning",
]
