"""scikit-learn style wrappers around strategies.

Rows of ``X`` are input tuples, one integer column per player.  Fitting a
quantum model builds the strategy program and verifies it; fitting the
classical search runs the baseline optimizer.  Both expose ``predict`` and
``score``, where the score is the mean probability of winning on the rows.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .classical import dj_coloring_search, exhaustive_search, strategy_count
from .dsl import load_game, load_strategy
from .errors import DomainError
from .games import (
    GameSpec,
    bell_example,
    build_program,
    dj_game,
    mermin_game,
    parity_game,
    strategy_distribution,
    verify_winning,
)


def resolve_game(game: str, k=None, n=None, l=None):
    """Built-in game and strategy by name; a path ending in ``.game`` loads a file pair."""
    if game == "mermin":
        return mermin_game()
    if game == "bell":
        return bell_example()
    if game == "dj":
        if k is None:
            raise DomainError("the dj game needs k")
        return dj_game(k)
    if game == "parity":
        if n is None or l is None:
            raise DomainError("the parity game needs n and l")
        return parity_game(n, l)
    if str(game).endswith(".game"):
        spec = load_game(game)
        strategy_path = Path(game).with_suffix(".strategy")
        return spec, load_strategy(strategy_path, spec) if strategy_path.exists() else None
    raise DomainError(f"unknown game {game!r}")


def _inputs(game: GameSpec, X) -> list[tuple[int, ...]]:
    X = check_array(X, dtype=np.int64, ensure_min_features=game.n_players)
    if X.shape[1] != game.n_players:
        raise ValueError(f"X has {X.shape[1]} columns, the game has {game.n_players} players")
    return [game.check_inputs(row) for row in X.tolist()]


class QuantumStrategyModel(BaseEstimator):
    """A quantum strategy viewed as a probabilistic predictor of outputs.

    After ``fit``, ``outputs_`` lists every output tuple in lexicographic
    order; ``predict_proba`` columns follow that order.  ``fit`` verifies
    the strategy on the promised rows of ``X`` (all promised inputs when
    ``X`` is None) and stores the report in ``report_``.
    """

    def __init__(self, game="mermin", k=None, n=None, l=None, tolerance=1e-9):
        self.game = game
        self.k = k
        self.n = n
        self.l = l
        self.tolerance = tolerance

    def fit(self, X=None, y=None):
        game, strategy = resolve_game(self.game, self.k, self.n, self.l)
        if strategy is None:
            raise DomainError("no strategy available for this game")
        inputs = None
        if X is not None:
            inputs = [x for x in _inputs(game, X) if game.promise(x)] or None
        self.game_ = game
        self.strategy_ = strategy
        self.program_ = build_program(game, strategy)
        self.outputs_ = list(game.outputs())
        self.report_ = verify_winning(game, strategy, self.tolerance, inputs)
        self.n_features_in_ = game.n_players
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "program_")
        column = {y: j for j, y in enumerate(self.outputs_)}
        rows = _inputs(self.game_, X)
        out = np.zeros((len(rows), len(self.outputs_)))
        for i, x in enumerate(rows):
            for y, p in strategy_distribution(self.game_, self.program_, x).items():
                out[i, column[y]] = p
        return out

    def predict(self, X) -> np.ndarray:
        """Most likely output tuple per row (lexicographically first on ties)."""
        proba = self.predict_proba(X)
        return np.array([self.outputs_[j] for j in proba.argmax(axis=1)], dtype=np.int64)

    def score(self, X, y=None) -> float:
        check_is_fitted(self, "program_")
        rows = _inputs(self.game_, X)
        wins = [
            self.game_.win_probability(x, strategy_distribution(self.game_, self.program_, x)) for x in rows
        ]
        return float(np.mean(wins))


class ClassicalStrategySearch(BaseEstimator):
    """Best deterministic local strategy found by the baseline search.

    Games small enough to enumerate are searched exhaustively; larger DJ
    games fall back to the colouring search with ``budget`` expansions.
    """

    def __init__(self, game="mermin", k=None, n=None, l=None, budget=1 << 20):
        self.game = game
        self.k = k
        self.n = n
        self.l = l
        self.budget = budget

    def fit(self, X=None, y=None):
        game, _ = resolve_game(self.game, self.k, self.n, self.l)
        if strategy_count(game) <= self.budget:
            result = exhaustive_search(game, cap=self.budget)
        elif self.game == "dj":
            result = dj_coloring_search(self.k, budget=self.budget)
        else:
            raise DomainError("game too large to search exhaustively within the budget")
        self.game_ = game
        self.result_ = result
        self.strategy_ = result.strategy
        self.best_fraction_ = result.best_fraction
        self.n_features_in_ = game.n_players
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "result_")
        rows = _inputs(self.game_, X)
        return np.array([self.strategy_.respond(x) for x in rows], dtype=np.int64).reshape(len(rows), -1)

    def score(self, X, y=None) -> float:
        """Fraction of rows on which the deterministic answers win."""
        check_is_fitted(self, "result_")
        rows = _inputs(self.game_, X)
        return float(np.mean([self.game_.win(x, self.strategy_.respond(x)) for x in rows]))
