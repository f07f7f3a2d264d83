"""Recursive-descent parser for ``.game`` and ``.strategy`` sources."""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import ast
from .diagnostics import Span, error

KEYWORDS = {
    "game", "players", "input", "output", "bits", "promise", "win",
    "sum", "in", "div", "mod", "xor", "and", "or", "not", "popcount", "bit",
    "true", "false",
}

# Unicode spellings accepted in place of the ASCII operators.
_ALIASES = {"⊕": "xor", "^": "xor", "∧": "and", "∨": "or", "¬": "not", "×": "*", "≠": "!=", "≤": "<=", "≥": ">="}
_SYMBOLS = sorted(
    ["{", "}", "(", ")", "[", "]", ";", ":", ",", "..", "+", "-", "*", "/", "'", "=", "!=",
     "<", "<=", ">", ">=", "->", *_ALIASES],
    key=len,
    reverse=True,
)
_NUMBER = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | INT | NUMBER | SYM | EOF
    text: str
    span: Span


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if c in " \t\r":
            col, i = col + 1, i + 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        m = _NUMBER.match(text, i)
        if m:
            lexeme = m.group()
            # "0..3" is INT DOTDOT INT, not a float
            if m.group(1) and text.startswith("..", m.start(1)):
                lexeme = text[i : m.start(1)]
            kind = "INT" if lexeme.isdigit() else "NUMBER"
            tokens.append(Token(kind, lexeme, Span(line, col, line, col + len(lexeme))))
            i += len(lexeme)
            col += len(lexeme)
            continue
        m = _IDENT.match(text, i)
        if m:
            lexeme = m.group()
            tokens.append(Token("IDENT", lexeme, Span(line, col, line, col + len(lexeme))))
            i += len(lexeme)
            col += len(lexeme)
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("SYM", _ALIASES.get(sym, sym), Span(line, col, line, col + len(sym))))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise error("lexical", f"unexpected character {c!r}", Span(line, col, line, col + 1))
    tokens.append(Token("EOF", "", Span(line, col, line, col)))
    return tokens


_COMPARISONS = {"=", "!=", "<", "<=", ">", ">="}
_WORD_OPS = {"xor", "and", "or", "not", "div", "mod"}


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def at(self, text: str) -> bool:
        t = self.tok
        if text in _WORD_OPS:
            return t.text == text and t.kind in ("IDENT", "SYM")
        return t.text == text and t.kind in ("IDENT", "SYM")

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.unexpected(f"{text!r}")
        return self.advance()

    def unexpected(self, wanted: str):
        t = self.tok
        found = "end of input" if t.kind == "EOF" else repr(t.text)
        return error("syntax", f"expected {wanted}, found {found}", t.span)

    def expect_int(self) -> tuple[int, Span]:
        t = self.tok
        if t.kind != "INT":
            raise self.unexpected("an integer")
        self.advance()
        return int(t.text), t.span

    def expect_ident(self, what: str = "a name") -> Token:
        t = self.tok
        if t.kind != "IDENT" or t.text in KEYWORDS:
            raise self.unexpected(what)
        return self.advance()

    def expect_eof(self) -> None:
        if self.tok.kind != "EOF":
            raise self.unexpected("end of input")

    # -- expressions --------------------------------------------------------

    def expr(self) -> ast.Expr:
        return self.or_expr()

    def _left_assoc(self, ops, sub):
        left = sub()
        while any(self.at(op) for op in ops):
            op = self.advance().text
            right = sub()
            left = ast.Binary(op, left, right, left.span.to(right.span))
        return left

    def or_expr(self):
        return self._left_assoc(("or",), self.and_expr)

    def and_expr(self):
        return self._left_assoc(("and",), self.comparison)

    def comparison(self):
        left = self.xor_expr()
        if self.tok.kind == "SYM" and self.tok.text in _COMPARISONS:
            op = self.advance().text
            right = self.xor_expr()
            left = ast.Binary(op, left, right, left.span.to(right.span))
            if self.tok.kind == "SYM" and self.tok.text in _COMPARISONS:
                raise error("syntax", "comparisons do not chain; add parentheses", self.tok.span)
        return left

    def xor_expr(self):
        return self._left_assoc(("xor",), self.additive)

    def additive(self):
        return self._left_assoc(("+", "-"), self.multiplicative)

    def multiplicative(self):
        return self._left_assoc(("*", "div", "mod"), self.unary)

    def unary(self):
        if self.at("not") or self.at("-"):
            t = self.advance()
            operand = self.unary()
            return ast.Unary(t.text, operand, t.span.to(operand.span))
        return self.atom()

    def atom(self) -> ast.Expr:
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return ast.IntLit(int(t.text), t.span)
        if t.kind == "NUMBER":
            raise error("syntax", "only integer literals are allowed in expressions", t.span)
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if t.kind == "IDENT":
            if t.text in ("true", "false"):
                self.advance()
                return ast.BoolLit(t.text == "true", t.span)
            if t.text == "popcount":
                self.advance()
                self.expect("(")
                arg = self.expr()
                end = self.expect(")")
                return ast.Call("popcount", (arg,), t.span.to(end.span))
            if t.text == "bit":
                self.advance()
                self.expect("(")
                a = self.expr()
                self.expect(",")
                b = self.expr()
                end = self.expect(")")
                return ast.Call("bit", (a, b), t.span.to(end.span))
            if t.text == "sum":
                self.advance()
                var = self.expect_ident("a bound variable")
                self.expect("in")
                lo = self.additive()
                self.expect("..")
                hi = self.additive()
                self.expect(":")
                body = self.unary()
                return ast.Sum(var.text, lo, hi, body, t.span.to(body.span))
            if t.text in KEYWORDS:
                raise self.unexpected("an expression")
            return self.var()
        raise self.unexpected("an expression")

    def var(self) -> ast.Var:
        t = self.expect_ident("a variable")
        end = t.span
        index = None
        if self.at("["):
            self.advance()
            index = self.expr()
            end = self.expect("]").span
        primed = False
        if self.at("'"):
            end = self.advance().span
            primed = True
        return ast.Var(t.text, index, primed, t.span.to(end))

    # -- games --------------------------------------------------------------

    def game(self) -> ast.GameAst:
        start = self.expect("game")
        name = self.expect_ident("a game name").text
        self.expect("{")
        self.expect("players")
        players, _ = self.expect_int()
        self.expect(";")
        self.expect("input")
        self.expect("bits")
        in_bits, _ = self.expect_int()
        self.expect(";")
        self.expect("output")
        self.expect("bits")
        out_bits, _ = self.expect_int()
        self.expect(";")
        self.expect("promise")
        self.expect(":")
        promise = self.expr()
        self.expect(";")
        self.expect("win")
        self.expect(":")
        win = self.expr()
        self.expect(";")
        end = self.expect("}")
        self.expect_eof()
        return ast.GameAst(name, players, in_bits, out_bits, promise, win, start.span.to(end.span))

    # -- strategies ---------------------------------------------------------

    def strategy(self) -> ast.StrategyAst:
        start = self.expect("strategy")
        name = self.expect_ident("a strategy name").text
        self.expect("for")
        game = self.expect_ident("a game name").text
        self.expect("{")
        self.expect("shared")
        self.expect(":")
        shared = self.shared()
        self.expect(";")
        players = []
        while self.at("player"):
            players.append(self.player())
        if not players:
            raise self.unexpected("'player'")
        end = self.expect("}")
        self.expect_eof()
        return ast.StrategyAst(name, game, shared, tuple(players), start.span.to(end.span))

    def shared(self) -> ast.Shared:
        t = self.tok
        if self.at("ghz") or self.at("pairsum"):
            self.advance()
            self.expect("(")
            value, _ = self.expect_int()
            end = self.expect(")")
            cls = ast.Ghz if t.text == "ghz" else ast.PairSum
            return cls(value, t.span.to(end.span))
        if self.at("amplitudes"):
            self.advance()
            self.expect("[")
            values = [self.amp()]
            while self.at(","):
                self.advance()
                values.append(self.amp())
            end = self.expect("]")
            return ast.Amplitudes(tuple(values), t.span.to(end.span))
        raise self.unexpected("'ghz', 'pairsum' or 'amplitudes'")

    def amp(self) -> ast.Amp:
        left = self.amp_term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            right = self.amp_term()
            left = ast.AmpBin(op, left, right, left.span.to(right.span))
        return left

    def amp_term(self) -> ast.Amp:
        left = self.amp_unary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            right = self.amp_unary()
            left = ast.AmpBin(op, left, right, left.span.to(right.span))
        return left

    def amp_unary(self) -> ast.Amp:
        if self.at("-"):
            t = self.advance()
            operand = self.amp_unary()
            return ast.AmpNeg(operand, t.span.to(operand.span))
        t = self.tok
        if t.kind in ("INT", "NUMBER"):
            self.advance()
            return ast.AmpNum(t.text, t.span)
        if self.at("i"):
            self.advance()
            return ast.AmpImag(t.span)
        if self.at("sqrt"):
            self.advance()
            self.expect("(")
            inner = self.amp()
            end = self.expect(")")
            return ast.AmpSqrt(inner, t.span.to(end.span))
        if self.at("("):
            self.advance()
            inner = self.amp()
            self.expect(")")
            return inner
        raise self.unexpected("an amplitude")

    def player(self) -> ast.PlayerBlock:
        start = self.expect("player")
        index, _ = self.expect_int()
        self.expect("qubits")
        lo, _ = self.expect_int()
        self.expect("..")
        hi, _ = self.expect_int()
        self.expect("{")
        body = []
        while not self.at("}"):
            if self.tok.kind == "EOF":
                raise self.unexpected("'}'")
            body.append(self.statement())
        end = self.expect("}")
        return ast.PlayerBlock(index, lo, hi, tuple(body), start.span.to(end.span))

    def statement(self) -> ast.Statement:
        t = self.tok
        if self.at("H"):
            self.advance()
            end = self.expect(";")
            return ast.Hadamard(t.span.to(end.span))
        if self.at("phase"):
            self.advance()
            self.expect("(")
            angle = self.angle()
            self.expect(")")
            guard = None
            if self.at("if"):
                self.advance()
                guard = self.expr()
            end = self.expect(";")
            return ast.Phase(angle, guard, t.span.to(end.span))
        if self.at("oracle_dj"):
            self.advance()
            self.expect("(")
            arg = self.var()
            self.expect(")")
            end = self.expect(";")
            return ast.OracleDj(arg, t.span.to(end.span))
        if self.at("measure"):
            self.advance()
            self.expect("->")
            target = self.var()
            end = self.expect(";")
            return ast.Measure(target, t.span.to(end.span))
        raise self.unexpected("'phase', 'H', 'oracle_dj' or 'measure'")

    def angle(self) -> ast.Angle:
        t = self.tok
        if t.kind == "INT" and t.text == "0":
            self.advance()
            return ast.Angle(zero=True, span=t.span)
        self.expect("pi")
        end = t.span
        num = den = None
        if self.at("*"):
            self.advance()
            num = self.unary()
            end = num.span
        if self.at("/"):
            self.advance()
            den = self.unary()
            end = den.span
        return ast.Angle(num, den, span=t.span.to(end))


def parse_game(text: str) -> ast.GameAst:
    return Parser(text).game()


def parse_strategy_source(text: str) -> ast.StrategyAst:
    return Parser(text).strategy()


def parse_expr(text: str) -> ast.Expr:
    p = Parser(text)
    e = p.expr()
    p.expect_eof()
    return e
