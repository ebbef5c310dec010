"""Source spans, structured diagnostics and the exception hierarchy."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    file: str
    start: int
    end: int
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"

    def cover(self, other: Span | None) -> Span:
        if other is None:
            return self
        return Span(self.file, min(self.start, other.start), max(self.end, other.end),
                    self.line if self.start <= other.start else other.line,
                    self.col if self.start <= other.start else other.col)


@dataclass(frozen=True)
class Diagnostic:
    category: str
    message: str
    span: Span | None = None
    constraint: str | None = None

    def render(self) -> str:
        where = str(self.span) if self.span else "<unknown>"
        text = f"{where}: {self.category}: {self.message}"
        if self.constraint:
            text += f" [constraint: {self.constraint}]"
        return text


class MttError(Exception):
    """Base error. ``category`` is the diagnostic category reported to users."""

    category = "Error"

    def __init__(self, message: str, span: Span | None = None, *,
                 category: str | None = None, constraint: str | None = None,
                 extra: tuple[Diagnostic, ...] = ()):
        super().__init__(message)
        self.message = message
        self.extra = tuple(extra)  # further diagnostics reported alongside this one
        self.span = span
        self.constraint = constraint
        if category is not None:
            self.category = category

    def with_span(self, span: Span | None) -> MttError:
        if self.span is None and span is not None:
            self.span = span
        return self

    def diagnostic(self) -> Diagnostic:
        return Diagnostic(self.category, self.message, self.span, self.constraint)


class DeclError(MttError):
    category = "DeclError"


class KernelError(MttError):
    category = "KernelError"


class FuelExhausted(KernelError):
    category = "FuelExhausted"


class UnifyError(MttError):
    category = "Mismatch"


class ElabError(MttError):
    category = "ElabError"


class LexError(MttError):
    category = "LexError"


class ParseError(MttError):
    category = "ParseError"
