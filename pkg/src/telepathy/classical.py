"""Deterministic communication-free classical strategies.

Each player answers with a fixed function of their own input, stored as a
lookup table.  Shared randomness is a convex mixture of such strategies, so
it cannot beat the best deterministic one; searching deterministic tables is
enough to certify the classical optimum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, SearchRefused
from .games import GameSpec, dj_game

CLASSICAL_MODEL = "deterministic local functions, no communication, no shared randomness"


@dataclass(frozen=True)
class LocalStrategy:
    """``tables[i][x]`` is player ``i``'s output on input ``x``."""

    tables: tuple[tuple[int, ...], ...]

    def respond(self, x) -> tuple[int, ...]:
        return tuple(t[v] for t, v in zip(self.tables, x))


@dataclass(frozen=True)
class SearchResult:
    best_fraction: Fraction
    strategy: LocalStrategy | None
    method: str
    exhausted: bool
    budget_consumed: int
    notes: tuple[str, ...] = field(default=())

    @property
    def wins_all(self) -> bool:
        return self.best_fraction == 1


def success_fraction(game: GameSpec, strategy: LocalStrategy) -> Fraction:
    """Share of promised inputs on which the strategy satisfies the winning condition."""
    promised = list(game.promised_inputs())
    wins = sum(1 for x in promised if game.win(x, strategy.respond(x)))
    return Fraction(wins, len(promised))


def verify_strategy(game: GameSpec, strategy: LocalStrategy) -> list[tuple[int, ...]]:
    """Promised inputs the strategy loses on (empty when it always wins)."""
    return [x for x in game.promised_inputs() if not game.win(x, strategy.respond(x))]


def strategy_count(game: GameSpec) -> int:
    per_player = (1 << game.output_bits) ** (1 << game.input_bits)
    return per_player**game.n_players


def exhaustive_search(game: GameSpec, cap: int = 1 << 20) -> SearchResult:
    """Try every tuple of local lookup tables in lexicographic order.

    The winning condition is tabulated once over promised inputs and all
    output tuples; the witness is the lexicographically first optimum.
    """
    total = strategy_count(game)
    if total > cap:
        raise SearchRefused(
            f"{total} strategy tuples exceed the cap of {cap}; use a backtracking search instead"
        )
    n_in = 1 << game.input_bits
    n_out = 1 << game.output_bits
    promised = list(game.promised_inputs())
    outputs = list(game.outputs())
    # win[j, o]: promised input j with output tuple index o
    win = np.array([[game.win(x, y) for y in outputs] for x in promised], dtype=bool)
    x_arr = np.array(promised, dtype=np.int64)
    place = n_out ** np.arange(game.n_players - 1, -1, -1)
    tables = np.array(list(itertools.product(range(n_out), repeat=n_in)), dtype=np.int64)

    best_wins = -1
    best = None
    for combo in itertools.product(range(len(tables)), repeat=game.n_players):
        outs = np.stack([tables[c][x_arr[:, i]] for i, c in enumerate(combo)], axis=1)
        wins = int(win[np.arange(len(promised)), outs @ place].sum())
        if wins > best_wins:
            best_wins, best = wins, combo
            if wins == len(promised):
                break
    witness = LocalStrategy(tuple(tuple(int(v) for v in tables[c]) for c in best))
    return SearchResult(
        Fraction(best_wins, len(promised)),
        witness,
        "exhaustive",
        True,
        total,
        (CLASSICAL_MODEL,),
    )


def balanced_difference_graph(k: int) -> list[list[int]]:
    """Adjacency lists on ``2**k``-bit strings, edges at Hamming distance ``2**(k-1)``."""
    m = 1 << k
    half = m >> 1
    n = 1 << m
    return [[u for u in range(n) if bin(u ^ v).count("1") == half] for v in range(n)]


def dj_coloring_search(k: int, budget: int = 1_000_000) -> SearchResult:
    """Backtracking ``2**k``-colouring of the balanced-difference graph.

    Equal inputs must give equal outputs, which forces both players to use
    the same function ``f``; winning on the other promised pairs means ``f``
    is a proper colouring.  Vertices are coloured in increasing order with
    first-fit colours.  ``budget`` bounds the number of colour assignments
    tried.
    """
    if not 1 <= k <= 3:
        raise DomainError(f"coloring search supports 1 <= k <= 3, got {k}")
    if budget <= 0:
        raise DomainError("budget must be positive")
    game, _ = dj_game(k)
    colors = 1 << k
    adj = balanced_difference_graph(k)
    n = len(adj)
    coloring = [-1] * n
    expansions = 0
    best_prefix: list[int] = []

    def solve(v: int) -> bool:
        nonlocal expansions, best_prefix
        if v == n:
            return True
        forbidden = {coloring[u] for u in adj[v] if u < v}
        for c in range(colors):
            if c in forbidden:
                continue
            if expansions >= budget:
                return False
            expansions += 1
            coloring[v] = c
            if v + 1 > len(best_prefix):
                best_prefix = coloring[: v + 1]
            if solve(v + 1):
                return True
            coloring[v] = -1
        return False

    found = solve(0)
    out_of_budget = not found and expansions >= budget
    notes = (
        CLASSICAL_MODEL,
        "equal inputs force f_A = f_B, so a winning strategy is a proper colouring "
        f"of the {n}-vertex balanced-difference graph with {colors} colours",
    )
    if found:
        f = tuple(coloring)
        strategy = LocalStrategy((f, f))
        return SearchResult(success_fraction(game, strategy), strategy, "backtracking", True, expansions, notes)
    # Complete the deepest partial colouring with colour 0 and report its true score.
    f = tuple(best_prefix + [0] * (n - len(best_prefix)))
    strategy = LocalStrategy((f, f))
    if out_of_budget:
        extra = "budget exhausted; fraction is that of the deepest partial colouring, completed with colour 0"
    else:
        extra = (
            "no proper colouring exists, so no classical strategy wins every promised input; "
            "fraction is a lower bound from the deepest partial colouring"
        )
    return SearchResult(
        success_fraction(game, strategy),
        strategy,
        "backtracking",
        not out_of_budget,
        expansions,
        notes + (extra,),
    )
