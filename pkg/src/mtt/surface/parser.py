"""Precedence-climbing term parser and vernacular command parser.

Operator levels follow the usual proof-assistant convention: a smaller level
binds tighter, application binds tighter than every operator, ``->`` sits at
99 (right associative) and binder forms extend as far right as possible.
"""

from __future__ import annotations

from typing import Callable, Iterator, Mapping

from ..diagnostics import ParseError, Span
from .lexer import Lexer, Token
from .syntax import (
    Binder, CAxiom, CCanonical, CCheck, CCoercion, CDefinition, CEval, CFail, CInductive, CNotation,
    Command, Ctor, CRecord, Field, SApp, SArrow, SAscribe, SExplicit, SHole, SLam, SNum, SOp, SPi,
    SSort, SurfaceTerm, SVar,
)

# token -> (level, associativity)
OpTable = Mapping[str, tuple[int, str]]

BUILTIN_LEVELS: dict[str, tuple[int, str]] = {"=": (70, "none"), "->": (99, "right")}
BINDER_LEVEL = 200
DEFAULT_NOTATION = (40, "left")


def _join(a: Span | None, b: Span | None) -> Span | None:
    if a is None:
        return b
    return a.cover(b)


class Parser:
    def __init__(self, lexer: Lexer, operators: Callable[[], OpTable] = lambda: {}):
        self.lexer = lexer
        self.operators = operators
        self.buf: list[Token] = []
        self.last: Token | None = None

    # -- token plumbing ---------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        while len(self.buf) <= k:
            self.buf.append(self.lexer.next(tuple(self.operators().keys())))
        return self.buf[k]

    def advance(self) -> Token:
        tok = self.peek()
        self.buf.pop(0)
        self.last = tok
        return tok

    def at(self, kind: str, value: str | None = None, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok.kind == kind and (value is None or tok.value == value)

    def accept(self, kind: str, value: str | None = None) -> Token | None:
        if self.at(kind, value):
            return self.advance()
        return None

    def expect(self, kind: str, value: str | None = None, what: str | None = None) -> Token:
        if self.at(kind, value):
            return self.advance()
        tok = self.peek()
        raise ParseError(f"expected {what or value or kind}, found {tok}", tok.span)

    def ident(self, what: str = "identifier") -> Token:
        return self.expect("ident", what=what)

    def span_from(self, start: Token) -> Span:
        return _join(start.span, self.last.span if self.last else None)

    # -- terms ------------------------------------------------------------

    def _level(self, tok: Token) -> tuple[int, str]:
        if tok.value in BUILTIN_LEVELS:
            return BUILTIN_LEVELS[tok.value]
        table = self.operators()
        if tok.value in table:
            return table[tok.value]
        raise ParseError(f"unknown operator {tok.value!r}", tok.span)

    def term(self, max_level: int = BINDER_LEVEL) -> SurfaceTerm:
        start = self.peek()
        if self.at("kw", "forall") or self.at("kw", "fun"):
            return self._binder_form()
        lhs = self.application()
        cur_level, cur_assoc = 0, "left"
        while self.at("op"):
            tok = self.peek()
            level, assoc = self._level(tok)
            if level > max_level:
                break
            if level == cur_level and cur_assoc == "none":
                raise ParseError(f"operator {tok.value!r} is not associative; add parentheses", tok.span)
            self.advance()
            rhs_max = level if assoc == "right" else level - 1
            if self.at("kw", "forall") or self.at("kw", "fun"):
                rhs = self._binder_form()
            else:
                rhs = self.term(rhs_max)
            span = _join(start.span, self.last.span)
            lhs = SArrow(lhs, rhs, span) if tok.value == "->" else SOp(tok.value, lhs, rhs, span)
            cur_level, cur_assoc = level, assoc
        return lhs

    def _binder_form(self) -> SurfaceTerm:
        start = self.advance()
        binders = self.binders(allow_bare_typed=True)
        if not binders:
            raise ParseError("expected at least one binder", self.peek().span)
        if start.value == "forall":
            self.expect("punct", ",")
            body = self.term()
            return SPi(tuple(binders), body, self.span_from(start))
        self.expect("punct", "=>")
        body = self.term()
        return SLam(tuple(binders), body, self.span_from(start))

    def binders(self, allow_bare_typed: bool = False) -> list[Binder]:
        """Binder groups: ``x``, ``(x y : A)``, ``{x : A}``, or ``x y : A`` when allowed."""
        out: list[Binder] = []
        while True:
            if self.at("ident") or self.at("hole"):
                start = self.peek()
                names = []
                while self.at("ident") or self.at("hole"):
                    names.append(self.advance().value)
                ty = None
                if allow_bare_typed and self.accept("punct", ":"):
                    ty = self.term()
                out.append(Binder(tuple(names), ty, False, self.span_from(start)))
                if ty is not None:
                    return out
            elif self.at("punct", "(") or self.at("punct", "{"):
                if self.at("punct", "(") and not (self.at("ident", k=1) or self.at("hole", k=1)):
                    return out
                start = self.advance()
                close = ")" if start.value == "(" else "}"
                names = []
                while self.at("ident") or self.at("hole"):
                    names.append(self.advance().value)
                if not names:
                    raise ParseError("expected binder name", self.peek().span)
                ty = self.term() if self.accept("punct", ":") else None
                if ty is None and close == ")":
                    raise ParseError("expected ':' in binder", self.peek().span)
                self.expect("punct", close)
                out.append(Binder(tuple(names), ty, close == "}", self.span_from(start)))
            else:
                return out

    def _starts_atom(self) -> bool:
        tok = self.peek()
        return (tok.kind in ("ident", "hole", "num")
                or (tok.kind == "kw" and (tok.value in ("Prop", "Type") or tok.value.startswith("Type@")))
                or (tok.kind == "punct" and tok.value in ("(", "@")))

    def application(self) -> SurfaceTerm:
        start = self.peek()
        if not self._starts_atom():
            raise ParseError(f"expected a term, found {start}", start.span)
        head = self.atom()
        args = []
        while self._starts_atom():
            args.append(self.atom())
        if not args:
            return head
        return SApp(head, tuple(args), self.span_from(start))

    def atom(self) -> SurfaceTerm:
        tok = self.advance()
        match tok.kind:
            case "ident":
                return SVar(tok.value, tok.span)
            case "hole":
                return SHole(tok.span)
            case "num":
                return SNum(int(tok.value), tok.span)
            case "kw" if tok.value == "Prop":
                return SSort(-1, tok.span)
            case "kw" if tok.value == "Type":
                return SSort(0, tok.span)
            case "kw" if tok.value.startswith("Type@"):
                return SSort(int(tok.value[6:-1]), tok.span)
            case "punct" if tok.value == "@":
                name = self.ident()
                return SExplicit(name.value, self.span_from(tok))
            case "punct" if tok.value == "(":
                inner = self.term()
                if self.accept("punct", ":"):
                    ty = self.term()
                    self.expect("punct", ")")
                    return SAscribe(inner, ty, self.span_from(tok))
                self.expect("punct", ")")
                return inner
        raise ParseError(f"expected a term, found {tok}", tok.span)

    # -- commands ---------------------------------------------------------

    def command(self) -> Command | None:
        if self.at("eof"):
            return None
        cmd = self._command_body()
        self.expect("punct", ".", what="'.' ending the command")
        return cmd

    def _command_body(self) -> Command:
        start = self.peek()
        if start.kind != "kw":
            raise ParseError(f"expected a command, found {start}", start.span)
        self.advance()
        match start.value:
            case "Definition":
                name = self.ident().value
                bs = self.binders()
                ty = self.term() if self.accept("punct", ":") else None
                self.expect("punct", ":=")
                body = self.term()
                return CDefinition(name, tuple(bs), ty, body, self.span_from(start))
            case "Axiom":
                names = [self.ident().value]
                while self.at("ident"):
                    names.append(self.advance().value)
                bs = self.binders()
                self.expect("punct", ":")
                ty = self.term()
                return CAxiom(tuple(names), tuple(bs), ty, self.span_from(start))
            case "Inductive":
                name = self.ident().value
                params = self.binders()
                self.expect("punct", ":")
                sort = self.term()
                self.expect("punct", ":=")
                self.accept("punct", "|")
                ctors = [self._ctor()]
                while self.accept("punct", "|"):
                    ctors.append(self._ctor())
                return CInductive(name, tuple(params), sort, tuple(ctors), self.span_from(start))
            case "Record":
                name = self.ident().value
                params = self.binders()
                self.expect("punct", ":")
                sort = self.term()
                self.expect("punct", ":=")
                ctor = self.ident("constructor name").value
                self.expect("punct", "{")
                fields = []
                while not self.at("punct", "}"):
                    fstart = self.ident("field name")
                    self.expect("punct", ":")
                    fty = self.term()
                    fields.append(Field(fstart.value, fty, self.span_from(fstart)))
                    if not self.accept("punct", ";"):
                        break
                self.expect("punct", "}")
                return CRecord(name, tuple(params), sort, ctor, tuple(fields), self.span_from(start))
            case "Coercion":
                fn = self.ident().value
                self.expect("punct", ":")
                src = self.ident("source class").value
                self.expect("punct", ">->")
                tgt = self.advance()
                if tgt.kind not in ("ident", "kw") or (tgt.kind == "kw" and tgt.value != "Type"):
                    raise ParseError(f"expected a coercion class, found {tgt}", tgt.span)
                return CCoercion(fn, src, tgt.value, self.span_from(start))
            case "Canonical":
                if self.at("ident", "Structure"):
                    self.advance()
                name = self.ident().value
                return CCanonical(name, self.span_from(start))
            case "Notation":
                return self._notation(start)
            case "Check":
                return CCheck(self.term(), self.span_from(start))
            case "Eval":
                return CEval(self.term(), self.span_from(start))
            case "Fail":
                inner = self._command_body()
                return CFail(inner, self.span_from(start))
        raise ParseError(f"expected a command, found {start}", start.span)

    def _ctor(self) -> Ctor:
        name = self.ident("constructor name")
        self.expect("punct", ":")
        ty = self.term()
        return Ctor(name.value, ty, self.span_from(name))

    def _notation(self, start: Token) -> CNotation:
        pat = self.expect("string", what="notation pattern")
        parts = pat.value.split()
        if len(parts) != 3 or not parts[0].isidentifier() or not parts[2].isidentifier():
            raise ParseError("notation pattern must have the form \"x OP y\"", pat.span)
        lhs, op, rhs = parts
        if lhs == rhs:
            raise ParseError("notation operands must be distinct names", pat.span)
        self.expect("punct", ":=")
        template = self.atom()
        level, assoc = DEFAULT_NOTATION
        if self.at("punct", "(") and self.at("ident", "at", k=1):
            self.advance()
            self.advance()
            if not self.accept("ident", "level"):
                raise ParseError("expected 'level'", self.peek().span)
            level = int(self.expect("num", what="precedence level").value)
            if not 0 <= level <= 100:
                raise ParseError("precedence levels range over 0..100", self.last.span)
            assoc = "none"
            if self.accept("punct", ","):
                a = self.ident("associativity")
                if a.value not in ("left", "right", "no"):
                    raise ParseError("expected left, right or no associativity", a.span)
                if not self.accept("ident", "associativity"):
                    raise ParseError("expected 'associativity'", self.peek().span)
                assoc = "none" if a.value == "no" else a.value
            self.expect("punct", ")")
        return CNotation(op, lhs, rhs, template, level, assoc, self.span_from(start))


def parse_term(text: str, operators: OpTable | None = None, file: str = "<input>") -> SurfaceTerm:
    ops = dict(operators or {})
    p = Parser(Lexer(text, file), lambda: ops)
    t = p.term()
    if not p.at("eof"):
        raise ParseError(f"unexpected {p.peek()} after term", p.peek().span)
    return t


def iter_commands(text: str, operators: Callable[[], OpTable], file: str = "<input>") -> Iterator[Command]:
    """Yield commands one at a time; the operator table is re-read before each one."""
    p = Parser(Lexer(text, file), operators)
    while True:
        cmd = p.command()
        if cmd is None:
            return
        yield cmd


def parse_commands(text: str, operators: OpTable | None = None, file: str = "<input>") -> list[Command]:
    ops = dict(operators or {})
    return list(iter_commands(text, lambda: ops, file))
