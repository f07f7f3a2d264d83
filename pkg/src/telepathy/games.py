"""Pseudo-telepathy games: game descriptions, quantum strategies, and the win check.

Player ``i`` reads input variable ``x{i}`` and writes output variable
``y{i}``; inputs and outputs are integers whose MSB-first binary encodings
are the bit strings of the game.  A strategy prepares a shared register
``psi`` and runs one local program per player on that player's qubits,
ending with a computational-basis measurement into the player's output.

The winning criterion checked by :func:`verify_winning` is ``S!P <= W!1``:
the strategy conditioned on the promise must be dominated pointwise by the
winning condition normalized over the outputs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Sequence

from . import linalg
from . import semantics as sem
from .errors import DomainError, VacuousPromise
from .linalg import Operator, StateVector
from .semantics import Distribution, LocalMeasure, LocalUnitary, Party, State, StateSpace

EPS_PROB = sem.EPS_PROB
QUANTUM_VAR = "psi"

Inputs = tuple[int, ...]
Outputs = tuple[int, ...]


def input_name(i: int) -> str:
    return f"x{i}"


def output_name(i: int) -> str:
    return f"y{i}"


@dataclass(frozen=True, eq=False)
class GameSpec:
    """Players, homogeneous input/output bit widths, promise and winning condition."""

    name: str
    n_players: int
    input_bits: int
    output_bits: int
    promise: Callable[[Inputs], bool]
    win: Callable[[Inputs, Outputs], bool]
    description: str = ""

    def __post_init__(self):
        if self.n_players < 1:
            raise DomainError("a game needs at least one player")
        if self.input_bits < 0 or self.output_bits < 0:
            raise DomainError("bit widths must be non-negative")
        if next(self.promised_inputs(), None) is None:
            raise VacuousPromise(f"no input satisfies the promise of game {self.name!r}")

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(input_name(i) for i in range(self.n_players))

    @property
    def output_names(self) -> tuple[str, ...]:
        return tuple(output_name(i) for i in range(self.n_players))

    def inputs(self) -> Iterator[Inputs]:
        return itertools.product(range(1 << self.input_bits), repeat=self.n_players)

    def outputs(self) -> Iterator[Outputs]:
        return itertools.product(range(1 << self.output_bits), repeat=self.n_players)

    def promised_inputs(self) -> Iterator[Inputs]:
        return (x for x in self.inputs() if self.promise(x))

    def check_inputs(self, x: Sequence[int]) -> Inputs:
        x = tuple(int(v) for v in x)
        if len(x) != self.n_players:
            raise DomainError(f"game {self.name!r} has {self.n_players} players, got {len(x)} inputs")
        for v in x:
            if not 0 <= v < 1 << self.input_bits:
                raise DomainError(f"input {v} does not fit in {self.input_bits} bits")
        return x

    def win_probability(self, x: Inputs, dist: Distribution) -> float:
        return math.fsum(p for y, p in dist.items() if self.win(x, y))

    def space(self, n_qubits: int | None = None, partition: dict | None = None) -> StateSpace:
        classical = {}
        for i in range(self.n_players):
            classical[input_name(i)] = range(1 << self.input_bits)
            classical[output_name(i)] = range(1 << self.output_bits)
        quantum = {}
        if n_qubits is not None:
            quantum[QUANTUM_VAR] = sem.QuantumVar(n_qubits, partition or {})
        return StateSpace(classical, quantum)

    def format_inputs(self, x: Inputs) -> tuple[str, ...]:
        return tuple(format(v, f"0{self.input_bits}b") if self.input_bits else "" for v in x)

    def format_outputs(self, y: Outputs) -> tuple[str, ...]:
        return tuple(format(v, f"0{self.output_bits}b") if self.output_bits else "" for v in y)


@dataclass(frozen=True)
class PlayerProgram:
    """Local unitaries for one player; a measurement into ``y{i}`` is appended implicitly."""

    qubits: tuple[int, int]
    steps: tuple[LocalUnitary, ...] = ()

    @property
    def width(self) -> int:
        return self.qubits[1] - self.qubits[0]


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    """Shared-state preparation plus one local program per player.

    ``preparation`` is a sequence whose first element is the state assigned
    to the register; later elements are unitaries applied to it in order.
    """

    name: str
    preparation: tuple[StateVector | Operator, ...]
    players: tuple[PlayerProgram, ...]
    description: str = ""

    def __post_init__(self):
        if not self.preparation or not isinstance(self.preparation[0], StateVector):
            raise DomainError("preparation must start with a state")
        n = self.preparation[0].n_qubits
        for op in self.preparation[1:]:
            if not isinstance(op, Operator) or op.n_qubits != n:
                raise DomainError("preparation unitaries must act on the whole register")

    @property
    def n_qubits(self) -> int:
        return self.preparation[0].n_qubits

    @cached_property
    def shared_state(self) -> StateVector:
        psi = self.preparation[0]
        for op in self.preparation[1:]:
            psi = linalg.apply(op, psi)
        return psi

    def partition(self) -> dict[str, tuple[int, int]]:
        return {f"P{i}": p.qubits for i, p in enumerate(self.players)}


# -- semantic program -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StrategyProgram:
    """A strategy elaborated into a specification over the game's state space."""

    game: GameSpec
    strategy: QuantumStrategy
    space: StateSpace
    spec: sem.Spec
    classical: sem.Spec = field(repr=False)

    def prestate(self, x: Inputs) -> State:
        values = {input_name(i): v for i, v in enumerate(x)}
        values.update({output_name(i): 0 for i in range(self.game.n_players)})
        values[QUANTUM_VAR] = linalg.zero_state(self.strategy.n_qubits)
        return State(values)


def build_program(game: GameSpec, strategy: QuantumStrategy) -> StrategyProgram:
    """``psi := prep; (S_0 ||_psi ... ||_psi S_{n-1})`` with the register summed out."""
    if len(strategy.players) != game.n_players:
        raise DomainError(
            f"strategy {strategy.name!r} has {len(strategy.players)} players, game has {game.n_players}"
        )
    for i, player in enumerate(strategy.players):
        if player.width != game.output_bits:
            raise DomainError(
                f"player {i} measures {player.width} qubits but outputs have {game.output_bits} bits"
            )
    space = game.space(strategy.n_qubits, strategy.partition())
    steps = [sem.assign(space, QUANTUM_VAR, strategy.preparation[0])]
    steps += [sem.unitary(space, QUANTUM_VAR, op) for op in strategy.preparation[1:]]
    parties = [
        Party(
            name=f"P{i}",
            qubits=player.qubits,
            owns=(input_name(i), output_name(i)),
            program=tuple(player.steps) + (LocalMeasure(output_name(i)),),
        )
        for i, player in enumerate(strategy.players)
    ]
    steps.append(sem.parallel(space, QUANTUM_VAR, parties))
    spec = sem.seq_all(*steps)
    return StrategyProgram(game, strategy, space, spec, sem.sum_out([QUANTUM_VAR], spec))


def _outputs_of(game: GameSpec, state: State) -> Outputs:
    return tuple(state[n] for n in game.output_names)


def strategy_distribution(
    game: GameSpec, strategy: QuantumStrategy | StrategyProgram, x: Sequence[int]
) -> Distribution:
    """Exact joint output distribution of the strategy on input ``x``."""
    program = strategy if isinstance(strategy, StrategyProgram) else build_program(game, strategy)
    x = game.check_inputs(x)
    table = program.classical.table(program.prestate(x))
    return Distribution(table).map_keys(lambda st: _outputs_of(game, st))


# -- verification -----------------------------------------------------------


@dataclass(frozen=True)
class InputResult:
    inputs: Inputs
    distribution: Distribution
    win_probability: float


@dataclass(frozen=True)
class VerificationReport:
    game: str
    strategy: str
    results: tuple[InputResult, ...]
    refinement: sem.Refinement
    tolerance: float
    exhaustive: bool
    promise_mass: float

    @property
    def min_win_probability(self) -> float:
        return min(r.win_probability for r in self.results)

    @property
    def refinement_holds(self) -> bool:
        return self.refinement.holds

    @property
    def winning(self) -> bool:
        return all(abs(r.win_probability - 1.0) <= self.tolerance for r in self.results)

    def result_for(self, x: Sequence[int]) -> InputResult:
        x = tuple(x)
        for r in self.results:
            if r.inputs == x:
                return r
        raise KeyError(x)


def winning_spec(game: GameSpec, space: StateSpace) -> sem.Spec:
    """``W`` as a boolean specification in the inputs and the primed outputs."""
    return sem.predicate(
        space,
        lambda pre, post: game.win(tuple(pre[n] for n in game.input_names), _outputs_of(game, post)),
        post_vars=game.output_names,
        label=f"W[{game.name}]",
    )


def promise_condition(game: GameSpec) -> Callable[[State], bool]:
    return lambda state: game.promise(tuple(state[n] for n in game.input_names))


def _memoized(spec: sem.Spec) -> sem.Spec:
    cache: dict = {}

    def table(pre):
        if pre not in cache:
            cache[pre] = spec.table(pre)
        return cache[pre]

    return sem.Spec(spec.space, spec.post_vars, table, distribution=spec.distribution, label=spec.label)


def verify_winning(
    game: GameSpec,
    strategy: QuantumStrategy,
    tolerance: float = EPS_PROB,
    inputs: Sequence[Sequence[int]] | None = None,
) -> VerificationReport:
    """Evaluate ``S!P`` and ``W!1`` on promised inputs and compare them.

    Both the pointwise refinement ``S!P <= W!1`` and the per-input win
    probability are computed.  ``inputs`` restricts the check to a subset of
    promised inputs (the report is then marked non-exhaustive).
    """
    program = build_program(game, strategy)
    promised = list(game.promised_inputs())
    if inputs is None:
        selected = promised
    else:
        selected = sorted({game.check_inputs(x) for x in inputs})
        bad = [x for x in selected if not game.promise(x)]
        if bad:
            raise DomainError(f"inputs {bad[:3]} violate the promise")
    total_inputs = 1 << (game.input_bits * game.n_players)
    s_given_p = _memoized(sem.learn(program.classical, promise_condition(game)))
    w_normalized = sem.normalize(winning_spec(game, program.space))
    prestates = [program.prestate(x) for x in selected]
    refinement = sem.refines(s_given_p, w_normalized, tolerance, prestates)
    results = []
    for x, pre in zip(selected, prestates):
        dist = Distribution(s_given_p.table(pre)).map_keys(lambda st: _outputs_of(game, st))
        results.append(InputResult(x, dist, game.win_probability(x, dist)))
    return VerificationReport(
        game=game.name,
        strategy=strategy.name,
        results=tuple(results),
        refinement=refinement,
        tolerance=tolerance,
        exhaustive=len(selected) == len(promised),
        promise_mass=len(promised) / total_inputs,
    )


# -- built-in games ---------------------------------------------------------


def _popcount(v: int) -> int:
    return bin(v).count("1")


def dj_game(k: int) -> tuple[GameSpec, QuantumStrategy]:
    """Deutsch-Jozsa game on ``2**k``-bit inputs with ``k``-bit outputs."""
    if not 1 <= k <= 3:
        raise DomainError(f"Deutsch-Jozsa game supports 1 <= k <= 3, got {k}")
    half = 1 << (k - 1)

    def promise(x):
        return x[0] == x[1] or _popcount(x[0] ^ x[1]) == half

    def win(x, y):
        return (x[0] == x[1] and y[0] == y[1]) or (_popcount(x[0] ^ x[1]) == half and y[0] != y[1])

    game = GameSpec(f"dj{k}", 2, 1 << k, k, promise, win, description=f"Deutsch-Jozsa game, k={k}")
    hk = linalg.hadamard_n(k)

    def player(i):
        name = input_name(i)
        return PlayerProgram(
            (i * k, (i + 1) * k),
            (
                LocalUnitary(lambda v: linalg.dj_oracle(v[name], k), label=f"oracle_dj({name})"),
                LocalUnitary(hk, label="H"),
            ),
        )

    strategy = QuantumStrategy(
        f"dj{k}_quantum",
        (
            linalg.zero_state(2 * k),
            linalg.tensor_op(hk, linalg.identity(k)),
            linalg.fanout(k),
        ),
        (player(0), player(1)),
        description="pairsum state via Hadamard and fan-out; oracle phase, Hadamard, measure",
    )
    return game, strategy


def mermin_game() -> tuple[GameSpec, QuantumStrategy]:
    """Mermin's three-player game on the GHZ state."""
    game = GameSpec(
        "mermin",
        3,
        1,
        1,
        lambda x: (x[0] ^ x[1] ^ x[2]) == 0,
        lambda x, y: (y[0] ^ y[1] ^ y[2]) == (x[0] + x[1] + x[2]) // 2,
        description="Mermin's game",
    )
    u = linalg.phase_gate(math.pi / 2)
    h = linalg.hadamard()

    def player(i):
        name = input_name(i)
        return PlayerProgram(
            (i, i + 1),
            (
                LocalUnitary(u, guard=lambda v: v[name] == 1, label=f"phase(pi/2) if {name} = 1"),
                LocalUnitary(h, label="H"),
            ),
        )

    strategy = QuantumStrategy("mermin_quantum", (linalg.ghz_state(3),), tuple(player(i) for i in range(3)))
    return game, strategy


def parity_game(n: int, l: int) -> tuple[GameSpec, QuantumStrategy]:
    """Parity game: ``n`` players with ``l``-bit inputs and one-bit outputs."""
    if not 3 <= n <= 10:
        raise DomainError(f"parity game supports 3 <= n <= 10 players, got {n}")
    if not 1 <= l <= 3:
        raise DomainError(f"parity game supports 1 <= l <= 3 input bits, got {l}")
    mod = 1 << l
    game = GameSpec(
        f"parity{n}_{l}",
        n,
        l,
        1,
        lambda x: sum(x) % mod == 0,
        lambda x, y: sum(y) % 2 == (sum(x) // mod) % 2,
        description=f"parity game, n={n}, l={l}",
    )
    h = linalg.hadamard()

    def player(i):
        name = input_name(i)
        return PlayerProgram(
            (i, i + 1),
            (
                LocalUnitary(lambda v: linalg.phase_gate(math.pi * v[name] / mod), label=f"phase(pi*{name}/{mod})"),
                LocalUnitary(h, label="H"),
            ),
        )

    strategy = QuantumStrategy(f"parity{n}_{l}_quantum", (linalg.ghz_state(n),), tuple(player(i) for i in range(n)))
    return game, strategy


def bell_example() -> tuple[GameSpec, QuantumStrategy]:
    """Two parties on a Bell pair: Alice applies H and measures, Bob measures.

    There is no input and every outcome wins; the interesting part is the
    output distribution, uniform over the four outcomes.
    """
    game = GameSpec("bell", 2, 0, 1, lambda x: True, lambda x, y: True, description="Bell pair example")
    strategy = QuantumStrategy(
        "bell_program",
        (linalg.ghz_state(2),),
        (PlayerProgram((0, 1), (LocalUnitary(linalg.hadamard(), label="H"),)), PlayerProgram((1, 2), ())),
    )
    return game, strategy


def truth_tables(game: GameSpec) -> tuple[tuple, tuple]:
    """Promise and winning truth tables, for comparing games element by element."""
    promise = tuple(bool(game.promise(x)) for x in game.inputs())
    win = tuple(bool(game.win(x, y)) for x in game.inputs() for y in game.outputs())
    return promise, win
