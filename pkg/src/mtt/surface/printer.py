"""Printing of core terms and surface terms.

Core printing hides inserted coercions and implicit arguments unless
``explicit`` is set.  Notations are printed back in one of three modes:
``"default"`` uses only notations whose template has no hidden hole (plus the
built-in ``=``), ``"all"`` uses every notation, ``"none"`` uses only ``=``.
Explicit output is meant to be read back in, so it marks constants that take
implicit arguments with ``@`` and never uses a notation with a hidden hole.
"""

from __future__ import annotations

from typing import Mapping

from ..term import App, Const, Lam, Meta, Pi, Sort, Term, Var, has_free_var, lift
from .syntax import (
    Binder, SApp, SArrow, SAscribe, SExplicit, SHole, SLam, SNum, SOp, SPi, SSort, SurfaceTerm,
    SVar,
)

BINDER = 200
ARROW = 99
APP = 1
ATOM = 0


def _paren(s: str, level: int, prec: int) -> str:
    return f"({s})" if level > prec else s


def sort_name(level: int) -> str:
    if level < 0:
        return "Prop"
    if level == 0:
        return "Type"
    return f"Type@{{{level}}}"


def notation_patterns(env) -> dict[str, list[tuple[str, tuple[str, ...], int, str]]]:
    """head constant -> [(token, argument roles, level, assoc)]; roles are lhs/rhs/hole."""
    out: dict[str, list] = {}
    if env is None:
        return out
    for entry in env.notations.values():
        tpl = entry.template
        if not (isinstance(tpl, SApp) and isinstance(tpl.fn, SVar)):
            continue
        roles = []
        for a in tpl.args:
            if isinstance(a, SHole):
                roles.append("hole")
            elif isinstance(a, SVar) and a.name == entry.lhs:
                roles.append("lhs")
            elif isinstance(a, SVar) and a.name == entry.rhs:
                roles.append("rhs")
            else:
                roles = None
                break
        if roles is None or roles.count("lhs") != 1 or roles.count("rhs") != 1:
            continue
        out.setdefault(tpl.fn.name, []).append((entry.token, tuple(roles), entry.level, entry.assoc))
    return out


class _Printer:
    def __init__(self, env, explicit: bool, notations: str):
        self.env = env
        self.explicit = explicit
        self.mode = notations
        self.patterns = notation_patterns(env) if notations != "none" else {}
        self.implicits = env.implicits if env is not None else {}

    def fresh(self, name: str, names: list[str], body: Term | None = None) -> str:
        if name == "_" and body is not None and not has_free_var(body, 0):
            return "_"
        base = "x" if name == "_" else name
        if base not in names:
            return base
        i = 0
        while f"{base}{i}" in names:
            i += 1
        return f"{base}{i}"

    def numeral(self, t: Term) -> int | None:
        n = 0
        while isinstance(t, App) and t.fn == Const("S"):
            n += 1
            t = t.arg
        return n if t == Const("O") else None

    def spine(self, t: Term) -> tuple[Term, list[Term]]:
        args = []
        while isinstance(t, App) and not (t.coe and not self.explicit):
            args.append(t.arg)
            t = t.fn
        args.reverse()
        return t, args

    def pp(self, t: Term, names: list[str], prec: int = BINDER) -> str:
        match t:
            case Sort(level):
                return sort_name(level)
            case Var(i):
                return names[len(names) - 1 - i] if i < len(names) else f"#{i}"
            case Const("O") if self.env is None or "S" in self.env:
                return "0"
            case Const(n) if self.explicit and any(self.implicits.get(n, ())):
                return f"@{n}"
            case Const(n):
                return n
            case Meta(m):
                return f"?{m}"
            case Pi(n, d, c) if not has_free_var(c, 0):
                # a binder on the right of an arrow extends to the end anyway
                rprec = BINDER if isinstance(c, (Pi, Lam)) else ARROW
                s = f"{self.pp(d, names, ARROW - 1)} -> {self.pp(c, names + ['_'], rprec)}"
                return _paren(s, ARROW, prec)
            case Pi() | Lam():
                return _paren(self.binders(t, names), BINDER, prec)
            case App():
                return self.app(t, names, prec)
        raise TypeError(f"not a term: {t!r}")

    def binders(self, t: Term, names: list[str]) -> str:
        kind = type(t)
        groups: list[tuple[list[str], Term]] = []
        inner = list(names)
        prev_dom: Term | None = None
        while isinstance(t, kind) and (kind is Lam or has_free_var(t.cod, 0)):
            body = t.body if kind is Lam else t.cod
            name = self.fresh(t.name, inner, body)
            if groups and prev_dom is not None and lift(prev_dom, 0, 1) == t.dom:
                groups[-1][0].append(name)
            else:
                groups.append(([name], self.pp(t.dom, inner)))
            prev_dom = t.dom
            inner = inner + [name]
            t = body
        if len(groups) == 1:
            ns, dom = groups[0]
            head = f"{' '.join(ns)} : {dom}"
        else:
            head = " ".join(f"({' '.join(ns)} : {dom})" for ns, dom in groups)
        body = self.pp(t, inner)
        if kind is Lam:
            return f"fun {head} => {body}"
        return f"forall {head}, {body}"

    def app(self, t: App, names: list[str], prec: int) -> str:
        if t.coe and not self.explicit:
            return self.pp(t.arg, names, prec)
        n = self.numeral(t)
        if n is not None:
            return str(n)
        head, args = self.spine(t)
        if isinstance(head, Const):
            s = self.notation(head.name, args, names, prec)
            if s is not None:
                return s
            flags = self.implicits.get(head.name)
            if flags and not self.explicit:
                args = [a for i, a in enumerate(args) if not (i < len(flags) and flags[i])]
                if not args:
                    return head.name
        parts = [self.pp(head, names, APP)] + [self.pp(a, names, ATOM) for a in args]
        return _paren(" ".join(parts), APP, prec)

    def notation(self, head: str, args: list[Term], names: list[str], prec: int) -> str | None:
        if head == "eq" and len(args) == 3 and self.env is not None and "eq" in self.env:
            return self.infix("=", 70, "none", args[1], args[2], names, prec)
        for token, roles, level, assoc in self.patterns.get(head, ()):
            if len(roles) != len(args):
                continue
            if "hole" in roles and (self.mode != "all" or self.explicit):
                continue
            lhs = args[roles.index("lhs")]
            rhs = args[roles.index("rhs")]
            return self.infix(token, level, assoc, lhs, rhs, names, prec)
        return None

    def infix(self, token, level, assoc, lhs, rhs, names, prec) -> str:
        lp = level if assoc == "left" else level - 1
        rp = level if assoc == "right" else level - 1
        s = f"{self.pp(lhs, names, lp)} {token} {self.pp(rhs, names, rp)}"
        return _paren(s, level, prec)


def show(t: Term, env=None, names: list[str] | None = None, *, explicit: bool = False,
         notations: str = "default") -> str:
    return _Printer(env, explicit, notations).pp(t, list(names or []))


# ---------------------------------------------------------------------------
# Surface terms

def _surface_level(s: SurfaceTerm, ops: Mapping[str, tuple[int, str]]) -> int:
    match s:
        case SPi() | SLam():
            return BINDER
        case SArrow():
            return ARROW
        case SOp(op):
            return _op_level(op, ops)[0]
        case SApp():
            return APP
    return ATOM


def _op_level(op: str, ops: Mapping[str, tuple[int, str]]) -> tuple[int, str]:
    if op == "=":
        return 70, "none"
    return ops.get(op, (40, "left"))


def _binder(b: Binder, ops) -> str:
    names = " ".join(b.names)
    if b.type is None:
        return f"{{{names}}}" if b.implicit else names
    inner = f"{names} : {show_surface(b.type, ops)}"
    return f"{{{inner}}}" if b.implicit else f"({inner})"


def show_surface(s: SurfaceTerm, ops: Mapping[str, tuple[int, str]] | None = None,
                 prec: int = BINDER) -> str:
    ops = ops or {}
    match s:
        case SVar(n):
            out = n
        case SExplicit(n):
            out = f"@{n}"
        case SHole():
            out = "_"
        case SNum(v):
            out = str(v)
        case SSort(level):
            out = sort_name(level)
        case SApp(fn, args):
            out = " ".join([show_surface(fn, ops, ATOM)] + [show_surface(a, ops, ATOM) for a in args])
        case SPi(bs, body):
            out = f"forall {' '.join(_binder(b, ops) for b in bs)}, {show_surface(body, ops)}"
        case SLam(bs, body):
            out = f"fun {' '.join(_binder(b, ops) for b in bs)} => {show_surface(body, ops)}"
        case SArrow(d, c):
            out = f"{show_surface(d, ops, ARROW - 1)} -> {show_surface(c, ops, ARROW)}"
        case SOp(op, l, r):
            level, assoc = _op_level(op, ops)
            lp = level if assoc == "left" else level - 1
            rp = level if assoc == "right" else level - 1
            out = f"{show_surface(l, ops, lp)} {op} {show_surface(r, ops, rp)}"
        case SAscribe(t, ty):
            return f"({show_surface(t, ops)} : {show_surface(ty, ops)})"
        case _:
            raise TypeError(f"not a surface term: {s!r}")
    return _paren(out, _surface_level(s, ops), prec)
