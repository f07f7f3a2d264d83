"""Render syntax trees back to source.

Every compound subexpression is parenthesized, so the output reparses to
the same tree regardless of precedence.
"""

from __future__ import annotations

from . import ast


def print_expr(e: ast.Expr) -> str:
    if isinstance(e, ast.IntLit):
        return str(e.value)
    if isinstance(e, ast.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, ast.Var):
        s = e.name
        if e.index is not None:
            s += f"[{print_expr(e.index)}]"
        return s + ("'" if e.primed else "")
    if isinstance(e, ast.Unary):
        sep = " " if e.op == "not" else ""
        return f"{e.op}{sep}{_sub(e.operand)}"
    if isinstance(e, ast.Binary):
        return f"{_sub(e.left)} {e.op} {_sub(e.right)}"
    if isinstance(e, ast.Call):
        return f"{e.func}(" + ", ".join(print_expr(a) for a in e.args) + ")"
    if isinstance(e, ast.Sum):
        return f"sum {e.var} in {_sub(e.lo)}..{_sub(e.hi)} : {_sub(e.body)}"
    raise TypeError(f"unknown expression node {e!r}")


def _sub(e: ast.Expr) -> str:
    text = print_expr(e)
    if isinstance(e, (ast.Unary, ast.Binary, ast.Sum)) or (isinstance(e, ast.IntLit) and e.value < 0):
        return f"({text})"
    return text


def print_game(g: ast.GameAst) -> str:
    return (
        f"game {g.name} {{\n"
        f"  players {g.players};\n"
        f"  input bits {g.input_bits};\n"
        f"  output bits {g.output_bits};\n"
        f"  promise: {print_expr(g.promise)};\n"
        f"  win: {print_expr(g.win)};\n"
        "}\n"
    )


def print_amp(a: ast.Amp) -> str:
    if isinstance(a, ast.AmpNum):
        return a.value
    if isinstance(a, ast.AmpImag):
        return "i"
    if isinstance(a, ast.AmpNeg):
        return f"-{_amp_sub(a.operand)}"
    if isinstance(a, ast.AmpSqrt):
        return f"sqrt({print_amp(a.operand)})"
    return f"{_amp_sub(a.left)} {a.op} {_amp_sub(a.right)}"


def _amp_sub(a: ast.Amp) -> str:
    text = print_amp(a)
    return f"({text})" if isinstance(a, (ast.AmpBin, ast.AmpNeg)) else text


def _shared(s: ast.Shared) -> str:
    if isinstance(s, ast.Ghz):
        return f"ghz({s.n})"
    if isinstance(s, ast.PairSum):
        return f"pairsum({s.k})"
    return "amplitudes [" + ", ".join(print_amp(a) for a in s.values) + "]"


def _angle(a: ast.Angle) -> str:
    if a.zero:
        return "0"
    s = "pi"
    if a.num is not None:
        s += f"*{_sub(a.num)}"
    if a.den is not None:
        s += f"/{_sub(a.den)}"
    return s


def _statement(st: ast.Statement) -> str:
    if isinstance(st, ast.Hadamard):
        return "H;"
    if isinstance(st, ast.OracleDj):
        return f"oracle_dj({print_expr(st.arg)});"
    if isinstance(st, ast.Measure):
        return f"measure -> {print_expr(st.target)};"
    guard = f" if {print_expr(st.guard)}" if st.guard is not None else ""
    return f"phase({_angle(st.angle)}){guard};"


def print_strategy(s: ast.StrategyAst) -> str:
    lines = [f"strategy {s.name} for {s.game} {{", f"  shared: {_shared(s.shared)};"]
    for p in s.players:
        lines.append(f"  player {p.index} qubits {p.start}..{p.stop} {{")
        lines += [f"    {_statement(st)}" for st in p.body]
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
