"""Incremental lexer.

Tokens are produced on demand so that operators registered by a ``Notation``
command take effect for the commands that follow it.  At a symbol character
the longest match among the fixed punctuation, the built-in operators and the
currently registered operators wins; an unregistered run of operator
characters becomes a single ``op`` token that the parser will reject.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from ..diagnostics import LexError, Span

KEYWORDS = frozenset({
    "Record", "Definition", "Inductive", "Axiom", "Coercion", "Canonical", "Notation",
    "Check", "Eval", "Fail", "forall", "fun", "Prop", "Type",
})

PUNCT = (":=", ">->", "->", "=>", ":", ",", ".", "(", ")", "{", "}", "@", "|", ";")
BUILTIN_OPS = ("=", "->")
OP_CHARS = frozenset("*+-/<>=!&^%~?\\|$#")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | kw | num | string | punct | op | hole | eof
    value: str
    span: Span

    def __str__(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.value)


class Lexer:
    def __init__(self, text: str, file: str = "<input>"):
        self.text = text
        self.file = file
        self.pos = 0
        self.line = 1
        self.col = 1

    def _advance(self, n: int) -> None:
        for ch in self.text[self.pos:self.pos + n]:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n

    def _span(self, start: int, line: int, col: int) -> Span:
        return Span(self.file, start, self.pos, line, col)

    def _skip_trivia(self) -> None:
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch.isspace():
                self._advance(1)
            elif text.startswith("(*", self.pos):
                start, line, col = self.pos, self.line, self.col
                depth = 0
                while True:
                    if self.pos >= len(text):
                        raise LexError("unterminated comment", Span(self.file, start, self.pos, line, col))
                    if text.startswith("(*", self.pos):
                        depth += 1
                        self._advance(2)
                    elif text.startswith("*)", self.pos):
                        depth -= 1
                        self._advance(2)
                        if depth == 0:
                            break
                    else:
                        self._advance(1)
            elif text.startswith("--", self.pos):
                while self.pos < len(text) and text[self.pos] != "\n":
                    self._advance(1)
            else:
                return

    def next(self, operators: Iterable[str] = ()) -> Token:
        self._skip_trivia()
        text = self.text
        start, line, col = self.pos, self.line, self.col
        if self.pos >= len(text):
            return Token("eof", "", self._span(start, line, col))
        ch = text[self.pos]

        if ch.isalpha() or ch == "_":
            end = self.pos + 1
            while end < len(text) and (text[end].isalnum() or text[end] in "_'"):
                end += 1
            word = text[self.pos:end]
            self._advance(end - self.pos)
            if word == "_":
                return Token("hole", word, self._span(start, line, col))
            if word == "Type" and text.startswith("@{", self.pos):
                close = text.find("}", self.pos)
                level = text[self.pos + 2:close] if close > 0 else ""
                if not level.isdigit():
                    raise LexError("expected a universe level in Type@{n}", self._span(start, line, col))
                self._advance(close + 1 - self.pos)
                return Token("kw", f"Type@{{{level}}}", self._span(start, line, col))
            kind = "kw" if word in KEYWORDS else "ident"
            return Token(kind, word, self._span(start, line, col))

        if ch.isdigit():
            end = self.pos
            while end < len(text) and text[end].isdigit():
                end += 1
            value = text[self.pos:end]
            self._advance(end - self.pos)
            return Token("num", value, self._span(start, line, col))

        if ch == '"':
            end = text.find('"', self.pos + 1)
            if end < 0:
                raise LexError("unterminated string", Span(self.file, start, len(text), line, col))
            value = text[self.pos + 1:end]
            self._advance(end + 1 - self.pos)
            return Token("string", value, self._span(start, line, col))

        best = ""
        best_kind = ""
        for cand, kind in _candidates(operators):
            if len(cand) > len(best) and text.startswith(cand, self.pos):
                best, best_kind = cand, kind
        if best:
            self._advance(len(best))
            return Token(best_kind, best, self._span(start, line, col))
        if ch in OP_CHARS:
            end = self.pos
            while end < len(text) and text[end] in OP_CHARS:
                end += 1
            value = text[self.pos:end]
            self._advance(end - self.pos)
            return Token("op", value, self._span(start, line, col))
        self._advance(1)
        raise LexError(f"unexpected character {ch!r}", self._span(start, line, col))


def _candidates(operators: Iterable[str]) -> Iterator[tuple[str, str]]:
    for p in PUNCT:
        yield p, ("op" if p == "->" else "punct")
    for op in BUILTIN_OPS:
        yield op, "op"
    for op in operators:
        yield op, "op"


def tokenize(text: str, operators: Iterable[str] = (), file: str = "<input>") -> list[Token]:
    """Whole-input tokenization against a fixed operator table."""
    ops = tuple(operators)
    lx = Lexer(text, file)
    out = []
    while True:
        tok = lx.next(ops)
        if tok.kind == "eof":
            return out
        out.append(tok)
