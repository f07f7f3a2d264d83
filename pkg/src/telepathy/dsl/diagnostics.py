from __future__ import annotations

from dataclasses import dataclass

from ..errors import TelepathyError


@dataclass(frozen=True)
class Span:
    """1-based start position and exclusive end position in the source."""

    line: int
    col: int
    end_line: int
    end_col: int

    def to(self, other: "Span") -> "Span":
        return Span(self.line, self.col, other.end_line, other.end_col)

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # lexical | syntax | type | semantic | locality
    message: str
    span: Span

    def format(self, filename: str | None = None) -> str:
        where = f"{filename}:{self.span}" if filename else str(self.span)
        return f"{where}: {self.kind} error: {self.message}"


class DslError(TelepathyError):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.format())
        self.diagnostic = diagnostic

    @property
    def span(self) -> Span:
        return self.diagnostic.span


def error(kind: str, message: str, span: Span) -> DslError:
    return DslError(Diagnostic(kind, message, span))
