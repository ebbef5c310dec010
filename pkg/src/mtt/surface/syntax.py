"""Surface syntax produced by the parser.  Every node carries its source span."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from ..diagnostics import Span


def _span() -> Span | None:
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SVar:
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class SExplicit:
    """``@name``: reference without implicit-argument insertion."""

    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class SHole:
    span: Span | None = _span()


@dataclass(frozen=True)
class SNum:
    value: int
    span: Span | None = _span()


@dataclass(frozen=True)
class SSort:
    level: int  # -1 for Prop
    span: Span | None = _span()


@dataclass(frozen=True)
class SApp:
    fn: SurfaceTerm
    args: tuple[SurfaceTerm, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class Binder:
    names: tuple[str, ...]
    type: SurfaceTerm | None
    implicit: bool = False
    span: Span | None = _span()


@dataclass(frozen=True)
class SLam:
    binders: tuple[Binder, ...]
    body: SurfaceTerm
    span: Span | None = _span()


@dataclass(frozen=True)
class SPi:
    binders: tuple[Binder, ...]
    body: SurfaceTerm
    span: Span | None = _span()


@dataclass(frozen=True)
class SArrow:
    dom: SurfaceTerm
    cod: SurfaceTerm
    span: Span | None = _span()


@dataclass(frozen=True)
class SOp:
    """Infix operator occurrence; expanded through the notation table by the elaborator."""

    op: str
    lhs: SurfaceTerm
    rhs: SurfaceTerm
    span: Span | None = _span()


@dataclass(frozen=True)
class SAscribe:
    term: SurfaceTerm
    type: SurfaceTerm
    span: Span | None = _span()


SurfaceTerm = Union[SVar, SExplicit, SHole, SNum, SSort, SApp, SLam, SPi, SArrow, SOp, SAscribe]


# ---------------------------------------------------------------------------
# Commands

@dataclass(frozen=True)
class CDefinition:
    name: str
    binders: tuple[Binder, ...]
    type: SurfaceTerm | None
    body: SurfaceTerm
    span: Span | None = _span()


@dataclass(frozen=True)
class CAxiom:
    names: tuple[str, ...]
    binders: tuple[Binder, ...]
    type: SurfaceTerm
    span: Span | None = _span()


@dataclass(frozen=True)
class Ctor:
    name: str
    type: SurfaceTerm
    span: Span | None = _span()


@dataclass(frozen=True)
class CInductive:
    name: str
    params: tuple[Binder, ...]
    sort: SurfaceTerm
    ctors: tuple[Ctor, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class Field:
    name: str
    type: SurfaceTerm
    span: Span | None = _span()


@dataclass(frozen=True)
class CRecord:
    name: str
    params: tuple[Binder, ...]
    sort: SurfaceTerm
    ctor: str
    fields: tuple[Field, ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class CCoercion:
    fn: str
    source: str
    target: str  # class name, or Sortclass/Funclass (``Type`` means Sortclass)
    span: Span | None = _span()


@dataclass(frozen=True)
class CCanonical:
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class CNotation:
    token: str
    lhs: str
    rhs: str
    template: SurfaceTerm
    level: int
    assoc: str
    span: Span | None = _span()


@dataclass(frozen=True)
class CCheck:
    term: SurfaceTerm
    span: Span | None = _span()


@dataclass(frozen=True)
class CEval:
    term: SurfaceTerm
    span: Span | None = _span()


@dataclass(frozen=True)
class CFail:
    command: Command
    span: Span | None = _span()


Command = Union[CDefinition, CAxiom, CInductive, CRecord, CCoercion, CCanonical, CNotation,
                CCheck, CEval, CFail]


def span_of(node) -> Span | None:
    return getattr(node, "span", None)
