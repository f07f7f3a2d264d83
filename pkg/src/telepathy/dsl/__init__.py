"""A small language for describing games and quantum strategies."""

from .compiler import (
    compile_game,
    compile_game_source,
    compile_strategy,
    load_game,
    load_strategy,
    parse_strategy,
)
from .diagnostics import Diagnostic, DslError, Span
from .parser import parse_expr, parse_game, parse_strategy_source, tokenize
from .printer import print_expr, print_game, print_strategy

__all__ = [
    "Diagnostic",
    "DslError",
    "Span",
    "compile_game",
    "compile_game_source",
    "compile_strategy",
    "load_game",
    "load_strategy",
    "parse_expr",
    "parse_game",
    "parse_strategy",
    "parse_strategy_source",
    "print_expr",
    "print_game",
    "print_strategy",
    "tokenize",
]
