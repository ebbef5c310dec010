"""Core terms with de Bruijn indices.

Binder names are kept for printing only and never take part in equality.
Sort levels use a single integer: ``PROP`` (-1) is the impredicative sort and
``i >= 0`` stands for ``Type i``, so the successor rule is simply ``level + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Union

PROP = -1


@dataclass(frozen=True, slots=True)
class Sort:
    level: int

    @property
    def is_prop(self) -> bool:
        return self.level == PROP


@dataclass(frozen=True, slots=True)
class Var:
    idx: int


@dataclass(frozen=True, slots=True)
class Const:
    name: str


@dataclass(frozen=True, slots=True)
class App:
    fn: Term
    arg: Term
    # set on applications inserted by the elaborator as coercions; printing only
    coe: bool = field(default=False, compare=False)


@dataclass(frozen=True, slots=True)
class Lam:
    # binder names are display hints; equality is alpha-equivalence
    name: str = field(compare=False)
    dom: Term
    body: Term


@dataclass(frozen=True, slots=True)
class Pi:
    name: str = field(compare=False)
    dom: Term
    cod: Term


@dataclass(frozen=True, slots=True)
class Meta:
    """Occurrence of metavariable ``id`` applied to its context ``spine``."""

    id: int
    spine: tuple[Term, ...] = ()


Term = Union[Sort, Var, Const, App, Lam, Pi, Meta]


def prop() -> Sort:
    return Sort(PROP)


def type_(i: int = 0) -> Sort:
    return Sort(i)


def pi_level(dom_level: int, cod_level: int) -> int:
    """Sort of a product; products into Prop stay in Prop."""
    if cod_level == PROP:
        return PROP
    return max(dom_level, cod_level, 0)


# ---------------------------------------------------------------------------
# Spines

def mk_app(fn: Term, *args: Term) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


def unfold_app(t: Term) -> tuple[Term, list[Term]]:
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def head_of(t: Term) -> Term:
    while isinstance(t, App):
        t = t.fn
    return t


# ---------------------------------------------------------------------------
# Generic traversal

def map_vars(t: Term, fn: Callable[[int, int], Term], depth: int = 0) -> Term:
    """Rebuild ``t`` replacing each ``Var(i)`` by ``fn(i, depth)``."""
    match t:
        case Var(i):
            return fn(i, depth)
        case Sort() | Const():
            return t
        case App(f, a, coe):
            return App(map_vars(f, fn, depth), map_vars(a, fn, depth), coe)
        case Lam(n, d, b):
            return Lam(n, map_vars(d, fn, depth), map_vars(b, fn, depth + 1))
        case Pi(n, d, c):
            return Pi(n, map_vars(d, fn, depth), map_vars(c, fn, depth + 1))
        case Meta(m, spine):
            return Meta(m, tuple(map_vars(s, fn, depth) for s in spine))
    raise TypeError(f"not a term: {t!r}")


def lift(t: Term, cutoff: int = 0, amount: int = 1) -> Term:
    """Shift free indices ``>= cutoff`` by ``amount``."""
    if amount == 0:
        return t

    def shift(i: int, depth: int) -> Term:
        return Var(i + amount) if i >= cutoff + depth else Var(i)

    return map_vars(t, shift)


def subst(t: Term, index: int, repl: Term) -> Term:
    """Replace ``Var(index)`` by ``repl`` and close the gap left by the removed variable."""

    def go(i: int, depth: int) -> Term:
        k = index + depth
        if i == k:
            return lift(repl, 0, depth)
        if i > k:
            return Var(i - 1)
        return Var(i)

    return map_vars(t, go)


def instantiate(body: Term, arg: Term) -> Term:
    return subst(body, 0, arg)


def instantiate_many(body: Term, args: list[Term]) -> Term:
    """Instantiate the outermost-first binder values ``args`` into ``body``.

    ``body`` lives under ``len(args)`` binders; ``args[0]`` is the outermost.
    """
    n = len(args)
    if n == 0:
        return body

    def go(i: int, depth: int) -> Term:
        j = i - depth
        if 0 <= j < n:
            return lift(args[n - 1 - j], 0, depth)
        if j >= n:
            return Var(i - n)
        return Var(i)

    return map_vars(body, go)


def has_free_var(t: Term, idx: int) -> bool:
    found = False

    def probe(i: int, depth: int) -> Term:
        nonlocal found
        if i == idx + depth:
            found = True
        return Var(i)

    map_vars(t, probe)
    return found


def free_vars(t: Term) -> set[int]:
    out: set[int] = set()

    def probe(i: int, depth: int) -> Term:
        if i >= depth:
            out.add(i - depth)
        return Var(i)

    map_vars(t, probe)
    return out


def subterms(t: Term) -> Iterator[Term]:
    yield t
    match t:
        case App(f, a):
            yield from subterms(f)
            yield from subterms(a)
        case Lam(_, d, b) | Pi(_, d, b):
            yield from subterms(d)
            yield from subterms(b)
        case Meta(_, spine):
            for s in spine:
                yield from subterms(s)


def metas_in(t: Term) -> set[int]:
    return {s.id for s in subterms(t) if isinstance(s, Meta)}


def has_meta(t: Term) -> bool:
    return any(isinstance(s, Meta) for s in subterms(t))


def replace_const(t: Term, name: str, fn: Callable[[int], Term], depth: int = 0) -> Term:
    match t:
        case Const(n) if n == name:
            return fn(depth)
        case Sort() | Const() | Var():
            return t
        case App(f, a, coe):
            return App(replace_const(f, name, fn, depth), replace_const(a, name, fn, depth), coe)
        case Lam(n, d, b):
            return Lam(n, replace_const(d, name, fn, depth), replace_const(b, name, fn, depth + 1))
        case Pi(n, d, c):
            return Pi(n, replace_const(d, name, fn, depth), replace_const(c, name, fn, depth + 1))
        case Meta(m, spine):
            return Meta(m, tuple(replace_const(s, name, fn, depth) for s in spine))
    raise TypeError(f"not a term: {t!r}")


def abstract(t: Term, placeholder: str) -> Term:
    """Turn occurrences of the placeholder constant into the variable of a new binder."""
    return replace_const(lift(t, 0, 1), placeholder, lambda depth: Var(depth))


def mk_pi(name: str, placeholder: str, dom: Term, body: Term) -> Pi:
    return Pi(name, dom, abstract(body, placeholder))


def mk_lam(name: str, placeholder: str, dom: Term, body: Term) -> Lam:
    return Lam(name, dom, abstract(body, placeholder))


def term_size(t: Term) -> int:
    return sum(1 for _ in subterms(t))
