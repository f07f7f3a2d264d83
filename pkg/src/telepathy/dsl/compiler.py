"""Type checking and compilation of parsed games and strategies.

Expressions compile to closures over an environment holding the input
tuple ``"x"``, the output tuple ``"y"`` and any bound ``sum`` indices.
Ranges ``lo..hi`` are half-open.  ``bit(e, i)`` is bit ``i`` of ``e``
counting from the least significant bit.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .. import linalg
from ..errors import DomainError, TelepathyError, VacuousPromise
from ..games import GameSpec, PlayerProgram, QuantumStrategy, input_name
from ..semantics import LocalUnitary
from . import ast
from .diagnostics import DslError, Span, error
from .parser import parse_game, parse_strategy_source

INT, BOOL = "int", "bool"
MAX_INPUT_SPACE = 1 << 20  # bound on (2**input_bits)**players
_FAMILY = re.compile(r"([xy])(\d+)$")

Fn = Callable[[dict], object]


@dataclass(frozen=True)
class _Context:
    players: int
    allow_outputs: bool
    # strategy context: the only player whose input may be read
    owner: int | None = None
    bound: frozenset = frozenset()

    def bind(self, name: str) -> "_Context":
        return _Context(self.players, self.allow_outputs, self.owner, self.bound | {name})


def _expect(kind: str, got: str, node, what: str) -> None:
    if got != kind:
        raise error("type", f"{what} must be {kind}, found {got}", node.span)


def _fail_runtime(message: str, span: Span):
    raise error("semantic", message, span)


def compile_expr(expr: ast.Expr, ctx: _Context) -> tuple[str, Fn]:
    """Return the static type of ``expr`` and a closure evaluating it."""
    if isinstance(expr, ast.IntLit):
        v = expr.value
        return INT, lambda env: v
    if isinstance(expr, ast.BoolLit):
        b = expr.value
        return BOOL, lambda env: b
    if isinstance(expr, ast.Var):
        return INT, _compile_var(expr, ctx)
    if isinstance(expr, ast.Unary):
        t, f = compile_expr(expr.operand, ctx)
        if expr.op == "not":
            _expect(BOOL, t, expr.operand, "operand of 'not'")
            return BOOL, lambda env: not f(env)
        _expect(INT, t, expr.operand, "operand of '-'")
        return INT, lambda env: -f(env)
    if isinstance(expr, ast.Binary):
        return _compile_binary(expr, ctx)
    if isinstance(expr, ast.Call):
        return _compile_call(expr, ctx)
    if isinstance(expr, ast.Sum):
        return _compile_sum(expr, ctx)
    raise TypeError(f"unknown expression node {expr!r}")


def _compile_var(var: ast.Var, ctx: _Context) -> Fn:
    if var.name in ctx.bound:
        if var.index is not None or var.primed:
            raise error("type", f"bound index {var.name!r} cannot be indexed or primed", var.span)
        name = var.name
        return lambda env: env[name]
    m = _FAMILY.match(var.name)
    if m and var.index is None:
        family, index = m.group(1), int(m.group(2))
        if index >= ctx.players:
            raise error("semantic", f"unresolved name {var.name!r}: there are {ctx.players} players", var.span)
        static_index = index
        index_fn = None
    elif var.name in ("x", "y") and var.index is not None:
        family = var.name
        t, index_fn = compile_expr(var.index, ctx)
        _expect(INT, t, var.index, "an index")
        static_index = var.index.value if isinstance(var.index, ast.IntLit) else None
        if static_index is not None and not 0 <= static_index < ctx.players:
            raise error("semantic", f"index {static_index} out of range for {ctx.players} players", var.span)
    else:
        raise error("semantic", f"unresolved name {var.name!r}", var.span)

    if family == "x":
        if var.primed:
            raise error("type", "inputs are not changed by a game; remove the prime", var.span)
        if ctx.owner is not None and static_index != ctx.owner:
            raise error("locality", f"player {ctx.owner} may only read its own input x{ctx.owner}", var.span)
    else:
        if ctx.owner is not None:
            raise error("locality", "strategy expressions may not read outputs", var.span)
        if not ctx.allow_outputs:
            raise error("type", "the promise may only mention inputs", var.span)
        if not var.primed:
            raise error("type", f"outputs are final values; write {var.name}{'[...]' if var.index else ''}'", var.span)

    players = ctx.players
    span = var.span
    if index_fn is None:
        return lambda env: env[family][static_index]

    def lookup(env):
        i = index_fn(env)
        if not 0 <= i < players:
            _fail_runtime(f"index {i} out of range for {players} players", span)
        return env[family][i]

    return lookup


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "xor": lambda a, b: a ^ b,
}
_ORDER = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _compile_binary(expr: ast.Binary, ctx: _Context) -> tuple[str, Fn]:
    lt, lf = compile_expr(expr.left, ctx)
    rt, rf = compile_expr(expr.right, ctx)
    op = expr.op
    if op in ("and", "or"):
        _expect(BOOL, lt, expr.left, f"left operand of '{op}'")
        _expect(BOOL, rt, expr.right, f"right operand of '{op}'")
        if op == "and":
            return BOOL, lambda env: lf(env) and rf(env)
        return BOOL, lambda env: lf(env) or rf(env)
    if op in ("=", "!="):
        if lt != rt:
            raise error("type", f"cannot compare {lt} with {rt}", expr.span)
        if op == "=":
            return BOOL, lambda env: lf(env) == rf(env)
        return BOOL, lambda env: lf(env) != rf(env)
    _expect(INT, lt, expr.left, f"left operand of '{op}'")
    _expect(INT, rt, expr.right, f"right operand of '{op}'")
    if op in _ORDER:
        g = _ORDER[op]
        return BOOL, lambda env: g(lf(env), rf(env))
    if op in _ARITH:
        g = _ARITH[op]
        if op == "xor":

            def xor(env):
                a, b = lf(env), rf(env)
                if a < 0 or b < 0:
                    _fail_runtime("xor of a negative number", expr.span)
                return a ^ b

            return INT, xor
        return INT, lambda env: g(lf(env), rf(env))
    span = expr.span

    def divmod_(env):
        a, b = lf(env), rf(env)
        if b == 0:
            _fail_runtime(f"'{op}' by zero", span)
        return a // b if op == "div" else a % b

    return INT, divmod_


def _compile_call(expr: ast.Call, ctx: _Context) -> tuple[str, Fn]:
    fns = []
    for arg in expr.args:
        t, f = compile_expr(arg, ctx)
        _expect(INT, t, arg, f"argument of {expr.func}")
        fns.append(f)
    span = expr.span
    if expr.func == "popcount":
        (f,) = fns

        def popcount(env):
            v = f(env)
            if v < 0:
                _fail_runtime("popcount of a negative number", span)
            return bin(v).count("1")

        return INT, popcount
    f, g = fns

    def bit(env):
        v, i = f(env), g(env)
        if v < 0 or i < 0:
            _fail_runtime("bit() needs non-negative arguments", span)
        return (v >> i) & 1

    return INT, bit


def _compile_sum(expr: ast.Sum, ctx: _Context) -> tuple[str, Fn]:
    if expr.var in ctx.bound or _FAMILY.match(expr.var) or expr.var in ("x", "y"):
        raise error("semantic", f"cannot rebind {expr.var!r}", expr.span)
    lt, lo = compile_expr(expr.lo, ctx)
    ht, hi = compile_expr(expr.hi, ctx)
    _expect(INT, lt, expr.lo, "a range bound")
    _expect(INT, ht, expr.hi, "a range bound")
    _, body = compile_expr(expr.body, ctx.bind(expr.var))  # booleans count as 0/1
    name = expr.var

    def total(env):
        acc = 0
        inner = dict(env)
        for i in range(lo(env), hi(env)):
            inner[name] = i
            acc += int(body(inner))
        return acc

    return INT, total


# -- games ------------------------------------------------------------------


def compile_game(tree: ast.GameAst) -> GameSpec:
    span = tree.span
    if tree.players < 1:
        raise error("semantic", "a game needs at least one player", span)
    if tree.input_bits < 0 or tree.output_bits < 1:
        raise error("semantic", "outputs need at least one bit", span)
    if (1 << tree.input_bits) ** tree.players > MAX_INPUT_SPACE:
        raise error("semantic", f"input space exceeds {MAX_INPUT_SPACE} tuples", span)
    pt, pf = compile_expr(tree.promise, _Context(tree.players, allow_outputs=False))
    _expect(BOOL, pt, tree.promise, "the promise")
    wt, wf = compile_expr(tree.win, _Context(tree.players, allow_outputs=True))
    _expect(BOOL, wt, tree.win, "the winning condition")
    try:
        return GameSpec(
            tree.name,
            tree.players,
            tree.input_bits,
            tree.output_bits,
            lambda x: bool(pf({"x": x})),
            lambda x, y: bool(wf({"x": x, "y": y})),
        )
    except VacuousPromise:
        raise error("semantic", "the promise holds for no input (vacuous promise)", tree.promise.span) from None


def compile_game_source(text: str) -> GameSpec:
    return compile_game(parse_game(text))


# -- strategies -------------------------------------------------------------


class _OwnInputs:
    """``x`` as seen by one player: only the player's own slot is readable."""

    def __init__(self, view, n_players):
        self._view = view
        self._n = n_players

    def __getitem__(self, i):
        return self._view[input_name(i)]


def _amp_value(node: ast.Amp) -> complex:
    if isinstance(node, ast.AmpNum):
        return complex(float(node.value))
    if isinstance(node, ast.AmpImag):
        return 1j
    if isinstance(node, ast.AmpNeg):
        return -_amp_value(node.operand)
    if isinstance(node, ast.AmpSqrt):
        return cmath.sqrt(_amp_value(node.operand))
    a, b = _amp_value(node.left), _amp_value(node.right)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if b == 0:
        raise error("semantic", "division by zero in amplitude", node.span)
    return a / b


def _preparation(shared: ast.Shared, n_qubits: int) -> tuple:
    if isinstance(shared, ast.Ghz):
        if shared.n != n_qubits:
            raise error("semantic", f"ghz({shared.n}) does not match the {n_qubits} qubits the players use", shared.span)
        return (linalg.ghz_state(shared.n),)
    if isinstance(shared, ast.PairSum):
        k = shared.k
        if k < 1 or 2 * k != n_qubits:
            raise error("semantic", f"pairsum({k}) does not match the {n_qubits} qubits the players use", shared.span)
        return (
            linalg.zero_state(2 * k),
            linalg.tensor_op(linalg.hadamard_n(k), linalg.identity(k)),
            linalg.fanout(k),
        )
    values = np.array([_amp_value(a) for a in shared.values], dtype=np.complex128)
    if len(values) != 1 << n_qubits:
        raise error(
            "semantic", f"{len(values)} amplitudes given, {1 << n_qubits} needed for {n_qubits} qubits", shared.span
        )
    norm = float(np.vdot(values, values).real)
    if abs(norm - 1.0) > linalg.EPS_NORM:
        raise error("semantic", f"amplitudes are not normalized (squared norm {norm:.12g})", shared.span)
    return (linalg.StateVector(values),)


def _angle(angle: ast.Angle, ctx: _Context) -> Callable[[dict], float]:
    if angle.zero:
        return lambda env: 0.0
    num = den = None
    if angle.num is not None:
        t, num = compile_expr(angle.num, ctx)
        _expect(INT, t, angle.num, "an angle numerator")
    if angle.den is not None:
        t, den = compile_expr(angle.den, ctx)
        _expect(INT, t, angle.den, "an angle denominator")
    span = angle.span

    def theta(env):
        a = num(env) if num else 1
        b = den(env) if den else 1
        if b == 0:
            _fail_runtime("angle denominator is zero", span)
        return math.pi * a / b

    return theta


def _own_var(var: ast.Var, family: str, player: int, what: str) -> None:
    m = _FAMILY.match(var.name)
    if var.index is not None and var.name == family and isinstance(var.index, ast.IntLit):
        index = var.index.value
    elif m and m.group(1) == family and var.index is None:
        index = int(m.group(2))
    else:
        raise error("type", f"{what} must name {family}{player}", var.span)
    if var.primed:
        raise error("type", f"{what} takes an unprimed variable", var.span)
    if index != player:
        raise error("locality", f"player {player} cannot use {family}{index}", var.span)


def _player(block: ast.PlayerBlock, game: GameSpec) -> PlayerProgram:
    i = block.index
    width = block.stop - block.start
    if width != game.output_bits:
        raise error(
            "semantic", f"player {i} holds {width} qubits but outputs have {game.output_bits} bits", block.span
        )
    ctx = _Context(game.n_players, allow_outputs=False, owner=i)
    n_players = game.n_players
    steps = []
    measured = False
    for stmt in block.body:
        if measured:
            raise error("semantic", "statements after the measurement", stmt.span)
        if isinstance(stmt, ast.Measure):
            _own_var(stmt.target, "y", i, "measure")
            measured = True
        elif isinstance(stmt, ast.Hadamard):
            steps.append(LocalUnitary(linalg.hadamard_n(width), label="H"))
        elif isinstance(stmt, ast.OracleDj):
            _own_var(stmt.arg, "x", i, "oracle_dj")
            if 1 << width != game.input_bits:
                raise error(
                    "type", f"oracle_dj on {width} qubits needs {1 << width}-bit inputs, game has {game.input_bits}",
                    stmt.span,
                )
            name = input_name(i)
            steps.append(LocalUnitary(lambda v, n=name: linalg.dj_oracle(v[n], width), label=f"oracle_dj({name})"))
        else:
            theta = _angle(stmt.angle, ctx)

            def gate(v, theta=theta):
                return linalg.tensor_power(linalg.phase_gate(theta({"x": _OwnInputs(v, n_players)})), width)

            guard = None
            if stmt.guard is not None:
                gt, gf = compile_expr(stmt.guard, ctx)
                _expect(BOOL, gt, stmt.guard, "a phase guard")

                def guard(v, gf=gf):
                    return bool(gf({"x": _OwnInputs(v, n_players)}))

            steps.append(LocalUnitary(gate, guard=guard, label="phase"))
    if not measured:
        raise error("semantic", f"player {i} never measures into y{i}", block.span)
    return PlayerProgram((block.start, block.stop), tuple(steps))


def compile_strategy(tree: ast.StrategyAst, game: GameSpec) -> QuantumStrategy:
    if tree.game != game.name:
        raise error("semantic", f"strategy is for game {tree.game!r}, not {game.name!r}", tree.span)
    blocks = {}
    for block in tree.players:
        if not 0 <= block.index < game.n_players:
            raise error("semantic", f"game has no player {block.index}", block.span)
        if block.index in blocks:
            raise error("semantic", f"player {block.index} declared twice", block.span)
        if block.stop <= block.start:
            raise error("semantic", "empty qubit range", block.span)
        blocks[block.index] = block
    if len(blocks) != game.n_players:
        missing = min(set(range(game.n_players)) - set(blocks))
        raise error("semantic", f"player {missing} has no program", tree.span)
    ordered = sorted(tree.players, key=lambda b: b.start)
    cursor = 0
    for block in ordered:
        if block.start != cursor:
            raise error("locality", f"qubits of player {block.index} overlap or leave a gap", block.span)
        cursor = block.stop
    if cursor > linalg.MAX_QUBITS:
        raise error("semantic", f"{cursor} qubits exceeds the supported maximum", tree.span)
    preparation = _preparation(tree.shared, cursor)
    players = tuple(_player(blocks[i], game) for i in range(game.n_players))
    try:
        return QuantumStrategy(tree.name, preparation, players)
    except (DomainError, TelepathyError) as exc:  # pragma: no cover - guarded above
        raise error("semantic", str(exc), tree.span) from None


def parse_strategy(text: str, game: GameSpec) -> QuantumStrategy:
    return compile_strategy(parse_strategy_source(text), game)


def load_game(path: str | Path) -> GameSpec:
    return compile_game_source(Path(path).read_text(encoding="utf-8"))


def load_strategy(path: str | Path, game: GameSpec) -> QuantumStrategy:
    return parse_strategy(Path(path).read_text(encoding="utf-8"), game)
