"""Syntax trees for ``.game`` and ``.strategy`` sources.

Spans are excluded from equality so that two trees compare equal exactly
when they are structurally identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import Span


def _span():
    return field(default=None, compare=False, repr=False)


# -- expressions ------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span = _span()


@dataclass(frozen=True)
class Var:
    """``x0``, ``x[i]``, ``y1'`` or a bound index ``i``."""

    name: str
    index: "Expr | None" = None
    primed: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class Unary:
    op: str  # "not" | "-"
    operand: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Binary:
    op: str  # + - * div mod xor = != < <= > >= and or
    left: "Expr"
    right: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    func: str  # popcount | bit
    args: tuple["Expr", ...]
    span: Span = _span()


@dataclass(frozen=True)
class Sum:
    var: str
    lo: "Expr"
    hi: "Expr"
    body: "Expr"
    span: Span = _span()


Expr = IntLit | BoolLit | Var | Unary | Binary | Call | Sum


# -- games ------------------------------------------------------------------


@dataclass(frozen=True)
class GameAst:
    name: str
    players: int
    input_bits: int
    output_bits: int
    promise: Expr
    win: Expr
    span: Span = _span()


# -- strategies -------------------------------------------------------------


@dataclass(frozen=True)
class AmpNum:
    value: str  # literal text, kept verbatim for printing
    span: Span = _span()


@dataclass(frozen=True)
class AmpImag:
    span: Span = _span()


@dataclass(frozen=True)
class AmpNeg:
    operand: "Amp"
    span: Span = _span()


@dataclass(frozen=True)
class AmpBin:
    op: str  # + - * /
    left: "Amp"
    right: "Amp"
    span: Span = _span()


@dataclass(frozen=True)
class AmpSqrt:
    operand: "Amp"
    span: Span = _span()


Amp = AmpNum | AmpImag | AmpNeg | AmpBin | AmpSqrt


@dataclass(frozen=True)
class Ghz:
    n: int
    span: Span = _span()


@dataclass(frozen=True)
class PairSum:
    k: int
    span: Span = _span()


@dataclass(frozen=True)
class Amplitudes:
    values: tuple[Amp, ...]
    span: Span = _span()


Shared = Ghz | PairSum | Amplitudes


@dataclass(frozen=True)
class Angle:
    """``pi * num / den``; a missing factor is ``None``.  ``zero`` marks the literal angle 0."""

    num: Expr | None = None
    den: Expr | None = None
    zero: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class Phase:
    angle: Angle
    guard: Expr | None = None
    span: Span = _span()


@dataclass(frozen=True)
class Hadamard:
    span: Span = _span()


@dataclass(frozen=True)
class OracleDj:
    arg: Var
    span: Span = _span()


@dataclass(frozen=True)
class Measure:
    target: Var
    span: Span = _span()


Statement = Phase | Hadamard | OracleDj | Measure


@dataclass(frozen=True)
class PlayerBlock:
    index: int
    start: int
    stop: int
    body: tuple[Statement, ...]
    span: Span = _span()


@dataclass(frozen=True)
class StrategyAst:
    name: str
    game: str
    shared: Shared
    players: tuple[PlayerBlock, ...]
    span: Span = _span()
