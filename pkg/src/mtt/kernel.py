"""Reduction, definitional equality and the type checker for meta-free terms.

The same reduction engine is reused by the unifier, which passes a
``metas`` callback so that assigned metavariables unfold like definitions.
The checker itself rejects any metavariable it meets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .diagnostics import FuelExhausted, KernelError
from .env import Environment
from .term import (
    App, Const, Lam, Meta, Pi, Sort, Term, Var, instantiate, lift, mk_app, pi_level, unfold_app,
)

DEFAULT_CONV_FUEL = 100_000

MetaLookup = Callable[[Meta], "Term | None"]
Context = list[tuple[str, Term]]


@dataclass(frozen=True)
class ReductionFlags:
    beta: bool = True
    delta: bool = True
    iota: bool = True


ALL = ReductionFlags()
NO_DELTA = ReductionFlags(delta=False)


class Fuel:
    def __init__(self, limit: int = DEFAULT_CONV_FUEL):
        self.limit = limit
        self.used = 0

    def tick(self, n: int = 1) -> None:
        self.used += n
        if self.used > self.limit:
            raise FuelExhausted(f"reduction budget of {self.limit} steps exhausted")


def _fuel(fuel: Fuel | None) -> Fuel:
    return fuel if fuel is not None else Fuel()


# ---------------------------------------------------------------------------
# Reduction

def whnf(env: Environment, t: Term, flags: ReductionFlags = ALL, fuel: Fuel | None = None,
         metas: MetaLookup | None = None) -> Term:
    fuel = _fuel(fuel)
    while True:
        nxt = step(env, t, flags, fuel, metas)
        if nxt is None:
            return t
        fuel.tick()
        t = nxt


def step(env: Environment, t: Term, flags: ReductionFlags, fuel: Fuel,
         metas: MetaLookup | None = None) -> Term | None:
    """One head reduction step, or None if the head is stable under ``flags``."""
    head, args = unfold_app(t)
    match head:
        case Lam(_, _, body) if args and flags.beta:
            return mk_app(instantiate(body, args[0]), *args[1:])
        case Meta() if metas is not None:
            val = metas(head)
            if val is not None:
                return mk_app(val, *args)
            return None
        case Const(name):
            info = env.lookup(name)
            if info is None:
                return None
            if info.kind == "def" and flags.delta:
                return mk_app(info.body, *args)
            if info.kind == "rec" and flags.iota:
                return _iota_rec(env, info.ind, args, flags, fuel, metas)
            if info.kind == "proj" and flags.iota:
                return _iota_proj(env, info.ind, info.index, args, flags, fuel, metas)
    return None


def _ctor_of(env: Environment, ind: str, t: Term) -> tuple[int, list[Term]] | None:
    h, cargs = unfold_app(t)
    if isinstance(h, Const):
        info = env.lookup(h.name)
        if info is not None and info.kind == "ctor" and info.ind == ind:
            return info.index, cargs
    return None


def _iota_rec(env, ind, args, flags, fuel, metas) -> Term | None:
    ii = env.inductives[ind]
    mi = ii.major_index
    if len(args) <= mi:
        return None
    # majors are reduced fully: flags only restrict rules at the head
    hit = _ctor_of(env, ind, whnf(env, args[mi], ALL, fuel, metas))
    if hit is None:
        return None
    j, cargs = hit
    fields = cargs[ii.nparams:]
    if len(fields) != ii.ctor_nargs[j]:
        return None
    fixed = args[:ii.nparams + 1 + len(ii.ctors)]
    ihs = [mk_app(Const(ii.rec_name), *fixed, *args[ii.nparams + 1 + len(ii.ctors):mi], fields[k])
           for k in ii.ctor_rec_args[j]]
    minor = args[ii.nparams + 1 + j]
    return mk_app(minor, *fields, *ihs, *args[mi + 1:])


def _iota_proj(env, ind, index, args, flags, fuel, metas) -> Term | None:
    ii = env.inductives[ind]
    if len(args) <= ii.nparams:
        return None
    hit = _ctor_of(env, ind, whnf(env, args[ii.nparams], ALL, fuel, metas))
    if hit is None:
        return None
    _, cargs = hit
    return mk_app(cargs[ii.nparams + index], *args[ii.nparams + 1:])


def normalize(env: Environment, t: Term, fuel: Fuel | None = None,
              metas: MetaLookup | None = None) -> Term:
    fuel = _fuel(fuel)
    t = whnf(env, t, ALL, fuel, metas)
    match t:
        case Lam(n, d, b):
            return Lam(n, normalize(env, d, fuel, metas), normalize(env, b, fuel, metas))
        case Pi(n, d, c):
            return Pi(n, normalize(env, d, fuel, metas), normalize(env, c, fuel, metas))
        case App():
            head, args = unfold_app(t)
            if isinstance(head, Meta):
                head = Meta(head.id, tuple(normalize(env, s, fuel, metas) for s in head.spine))
            return mk_app(head, *(normalize(env, a, fuel, metas) for a in args))
        case Meta(m, spine):
            return Meta(m, tuple(normalize(env, s, fuel, metas) for s in spine))
    return t


# ---------------------------------------------------------------------------
# Conversion

def is_def_eq(env: Environment, t: Term, u: Term, fuel: Fuel | None = None,
              metas: MetaLookup | None = None) -> bool:
    return _conv(env, t, u, False, _fuel(fuel), metas)


def is_sub(env: Environment, t: Term, u: Term, fuel: Fuel | None = None,
           metas: MetaLookup | None = None) -> bool:
    """``t`` converts to ``u`` up to universe cumulativity at the top and in Pi codomains."""
    return _conv(env, t, u, True, _fuel(fuel), metas)


def _delta_order(env: Environment, t: Term) -> int | None:
    h = t
    while isinstance(h, App):
        h = h.fn
    if isinstance(h, Const):
        info = env.lookup(h.name)
        if info is not None and info.kind == "def":
            return info.order
    return None


def _unfold_head(env: Environment, t: Term) -> Term:
    head, args = unfold_app(t)
    return mk_app(env.consts[head.name].body, *args)


def _conv(env: Environment, t: Term, u: Term, sub: bool, fuel: Fuel, metas) -> bool:
    fuel.tick()
    if t == u:
        return True
    t = whnf(env, t, NO_DELTA, fuel, metas)
    u = whnf(env, u, NO_DELTA, fuel, metas)
    if t == u:
        return True
    match t, u:
        case Sort(a), Sort(b):
            return a == b or (sub and a <= b)
        case Pi(_, d1, c1), Pi(_, d2, c2):
            return _conv(env, d1, d2, False, fuel, metas) and _conv(env, c1, c2, sub, fuel, metas)
        case Lam(_, d1, b1), Lam(_, d2, b2):
            return _conv(env, d1, d2, False, fuel, metas) and _conv(env, b1, b2, False, fuel, metas)
        case Lam(_, _, b), _:
            return _conv(env, b, App(lift(u, 0, 1), Var(0)), False, fuel, metas)
        case _, Lam(_, _, b):
            return _conv(env, App(lift(t, 0, 1), Var(0)), b, False, fuel, metas)

    ot, ou = _delta_order(env, t), _delta_order(env, u)
    if ot is not None or ou is not None:
        if ot is not None and ot == ou and _same_spine(env, t, u, fuel, metas):
            return True
        if ou is None or (ot is not None and ot > ou):
            return _conv(env, _unfold_head(env, t), u, sub, fuel, metas)
        if ot is None or ou > ot:
            return _conv(env, t, _unfold_head(env, u), sub, fuel, metas)
        return _conv(env, _unfold_head(env, t), _unfold_head(env, u), sub, fuel, metas)
    return _rigid_eq(env, t, u, fuel, metas)


def _same_spine(env, t, u, fuel, metas) -> bool:
    ht, at = unfold_app(t)
    hu, au = unfold_app(u)
    if ht != hu or len(at) != len(au):
        return False
    return all(_conv(env, a, b, False, fuel, metas) for a, b in zip(at, au))


def _rigid_eq(env, t, u, fuel, metas) -> bool:
    ht, at = unfold_app(t)
    hu, au = unfold_app(u)
    if len(at) != len(au):
        return False
    match ht, hu:
        case Var(i), Var(j) if i == j:
            pass
        case Const(a), Const(b) if a == b:
            pass
        case Meta(m, s1), Meta(n, s2) if m == n and len(s1) == len(s2):
            if not all(_conv(env, a, b, False, fuel, metas) for a, b in zip(s1, s2)):
                return False
        case _:
            return False
    return all(_conv(env, a, b, False, fuel, metas) for a, b in zip(at, au))


# ---------------------------------------------------------------------------
# Type checking

def _show(env: Environment, t: Term, ctx: Context) -> str:
    from .surface.printer import show
    return show(t, env, [n for n, _ in ctx])


def infer_type(env: Environment, ctx: Context, t: Term, fuel: Fuel | None = None) -> Term:
    fuel = _fuel(fuel)
    match t:
        case Sort(level):
            return Sort(level + 1)
        case Var(i):
            if i >= len(ctx):
                raise KernelError(f"unbound variable #{i}", category="UnboundVariable")
            return lift(ctx[len(ctx) - 1 - i][1], 0, i + 1)
        case Const(name):
            info = env.lookup(name)
            if info is None:
                raise KernelError(f"unknown constant {name}", category="UnknownIdentifier")
            return info.type
        case App(f, a):
            ft = whnf(env, infer_type(env, ctx, f, fuel), ALL, fuel)
            if not isinstance(ft, Pi):
                raise KernelError(f"{_show(env, f, ctx)} has type {_show(env, ft, ctx)}, which is "
                                  f"not a function type", category="NotAFunction")
            at = infer_type(env, ctx, a, fuel)
            if not is_sub(env, at, ft.dom, fuel):
                raise KernelError(f"argument {_show(env, a, ctx)} has type {_show(env, at, ctx)} "
                                  f"but is expected to have type {_show(env, ft.dom, ctx)}",
                                  category="TypeMismatch")
            return instantiate(ft.cod, a)
        case Lam(n, d, b):
            sort_of(env, ctx, d, fuel)
            bt = infer_type(env, ctx + [(n, d)], b, fuel)
            return Pi(n, d, bt)
        case Pi(n, d, c):
            l1 = sort_of(env, ctx, d, fuel)
            l2 = sort_of(env, ctx + [(n, d)], c, fuel)
            return Sort(pi_level(l1, l2))
        case Meta(m):
            raise KernelError(f"metavariable ?{m} reached the kernel", category="UnresolvedMeta")
    raise TypeError(f"not a term: {t!r}")


def sort_of(env: Environment, ctx: Context, t: Term, fuel: Fuel | None = None) -> int:
    ty = whnf(env, infer_type(env, ctx, t, fuel), ALL, fuel)
    if not isinstance(ty, Sort):
        raise KernelError(f"{_show(env, t, ctx)} is not a type (its type is {_show(env, ty, ctx)})",
                          category="SortError")
    return ty.level


def check(env: Environment, ctx: Context, t: Term, expected: Term, fuel: Fuel | None = None) -> None:
    fuel = _fuel(fuel)
    actual = infer_type(env, ctx, t, fuel)
    if not is_sub(env, actual, expected, fuel):
        raise KernelError(f"{_show(env, t, ctx)} has type {_show(env, actual, ctx)} but is expected "
                          f"to have type {_show(env, expected, ctx)}", category="TypeMismatch")
