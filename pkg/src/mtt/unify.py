"""Metavariable context and unification.

Each constraint is worked on with a fixed order of resources:

1. syntactic comparison and rigid-rigid decomposition,
2. Miller-pattern solving for flexible sides (or postponement),
3. canonical-structure hints for a projection of an unknown structure,
4. head reduction (beta/iota first, then one delta unfolding) and retry.

Assignments are monotone.  Speculative work inside one ``unify`` call is
undone through a trail when an attempt fails.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .diagnostics import Span, UnifyError
from .env import Environment, head_key, key_str
from .kernel import ALL, NO_DELTA, Fuel, step, whnf
from .term import (
    App, Const, Lam, Meta, Pi, Sort, Term, Var, free_vars, instantiate_many, lift, map_vars,
    metas_in, mk_app, subterms, unfold_app,
)

DEFAULT_UNIFY_FUEL = 10_000

Context = list[tuple[str, Term]]


@dataclass
class MetaDecl:
    id: int
    ctx: Context
    type: Term
    origin: str  # implicit-arg | hole | binder-type | coercion-probe | function-type
    span: Span | None = None
    name: str = ""


@dataclass(eq=False)
class Constraint:
    ctx: Context
    lhs: Term
    rhs: Term
    span: Span | None = None
    cumul: bool = False  # rhs may sit in a lower universe than lhs
    status: str = "active"
    reason: str = ""  # why it was postponed: flex-flex | non-pattern | stuck


class Tracer:
    """Collects NDJSON-ready trace records; ``steps`` counts unification records."""

    def __init__(self, kinds: frozenset[str] = frozenset()):
        self.kinds = kinds
        self.records: list[dict] = []
        self.steps = 0

    def wants(self, kind: str) -> bool:
        return kind in self.kinds

    def emit(self, kind: str, record: dict) -> None:
        if kind == "unify":
            self.steps += 1
        if kind in self.kinds:
            self.records.append({"kind": kind, **record})


class ElabState:
    def __init__(self, env: Environment, *, tracer: Tracer | None = None,
                 ids: Iterator[int] | None = None, unify_fuel: int = DEFAULT_UNIFY_FUEL,
                 conv_fuel: int | None = None):
        self.env = env
        self.metas: dict[int, MetaDecl] = {}
        self.assignments: dict[int, Term] = {}
        self.postponed: list[Constraint] = []
        self.trail: list[int] = []
        self.tracer = tracer or Tracer()
        self.ids = ids or itertools.count(1)
        self.unify_fuel = unify_fuel
        self.conv_fuel = conv_fuel

    # -- metas ------------------------------------------------------------

    def new_meta(self, ctx: Context, ty: Term, origin: str, span: Span | None = None,
                 name: str = "") -> Meta:
        mid = next(self.ids)
        self.metas[mid] = MetaDecl(mid, list(ctx), ty, origin, span, name)
        n = len(ctx)
        return Meta(mid, tuple(Var(n - 1 - i) for i in range(n)))

    def is_assigned(self, mid: int) -> bool:
        return mid in self.assignments

    def lookup(self, m: Meta) -> Term | None:
        """Instantiation of an assigned meta occurrence, or None."""
        val = self.assignments.get(m.id)
        if val is None:
            return None
        k = len(self.metas[m.id].ctx)
        body = val
        for _ in range(k):
            body = body.body
        return instantiate_many(body, list(m.spine))

    def assign(self, mid: int, value: Term) -> None:
        if mid in self.assignments:
            raise AssertionError(f"meta ?{mid} assigned twice")
        self.assignments[mid] = value
        self.trail.append(mid)

    def checkpoint(self) -> tuple[int, list[Constraint]]:
        return len(self.trail), list(self.postponed)

    def rollback(self, cp: tuple[int, list[Constraint]]) -> None:
        n, postponed = cp
        while len(self.trail) > n:
            del self.assignments[self.trail.pop()]
        self.postponed = postponed

    def fuel(self) -> Fuel:
        return Fuel(self.conv_fuel) if self.conv_fuel is not None else Fuel()

    def zonk(self, t: Term) -> Term:
        """Substitute all assigned metas, reducing the beta redexes this creates at heads."""
        if not self.assignments or not any(isinstance(s, Meta) for s in subterms(t)):
            return t
        return self._zonk(t)

    def _zonk(self, t: Term) -> Term:
        match t:
            case Meta(m, spine):
                zs = Meta(m, tuple(self._zonk(s) for s in spine))
                val = self.lookup(zs)
                return zs if val is None else self._zonk(val)
            case App():
                head, args = unfold_app(t)
                zargs = [self._zonk(a) for a in args]
                if isinstance(head, Meta):
                    zh = self._zonk(head)
                    out = zh
                    for a in zargs:
                        out = _beta(out, a)
                    return out
                zh = self._zonk(head)
                return _rebuild(t, zh, zargs)
            case Lam(n, d, b):
                return Lam(n, self._zonk(d), self._zonk(b))
            case Pi(n, d, c):
                return Pi(n, self._zonk(d), self._zonk(c))
        return t

    def zonk_head(self, t: Term) -> Term:
        while True:
            head, args = unfold_app(t)
            if isinstance(head, Meta):
                val = self.lookup(head)
                if val is not None:
                    out = val
                    for a in args:
                        out = _beta(out, a)
                    t = out
                    continue
            return t

    def unassigned_in(self, t: Term) -> set[int]:
        return {m for m in metas_in(self.zonk(t)) if m not in self.assignments}

    # -- unification entry points -----------------------------------------

    def unify(self, ctx: Context, lhs: Term, rhs: Term, span: Span | None = None,
              cumul: bool = False) -> None:
        """Unify, or raise ``UnifyError``; on failure the state is left unchanged."""
        cp = self.checkpoint()
        try:
            c = Constraint(list(ctx), lhs, rhs, span, cumul)
            _Solver(self, c).run()
            self.wake_all()
        except UnifyError:
            self.rollback(cp)
            raise

    def wake_postponed(self, mid: int) -> None:
        """Re-attempt postponed constraints that mention ``mid``."""
        woken = [c for c in self.postponed if mid in metas_in(c.lhs) | metas_in(c.rhs)]
        if not woken:
            return
        self.postponed = [c for c in self.postponed if c not in woken]
        for c in woken:
            c.status = "active"
            _Solver(self, c).run()

    def wake_all(self) -> None:
        progress = True
        while progress:
            progress = False
            for c in list(self.postponed):
                if any(self.is_assigned(m) for m in metas_in(c.lhs) | metas_in(c.rhs)):
                    if c in self.postponed:
                        self.postponed.remove(c)
                    c.status = "active"
                    _Solver(self, c).run()
                    progress = True

    def postpone(self, c: Constraint, reason: str) -> None:
        self.postponed.append(Constraint(c.ctx, self.zonk(c.lhs), self.zonk(c.rhs), c.span, c.cumul,
                                         "postponed", reason))

    # -- pattern fragment --------------------------------------------------

    def solve_pattern(self, ctx: Context, meta: Meta, args: list[Term], rhs: Term) -> bool:
        """Assign ``meta args := rhs`` when the spine is a Miller pattern.

        Returns False when the spine is not a list of distinct bound variables.
        Raises OccursCheck / ScopeError failures as ``UnifyError``.
        """
        spine = [self.zonk(s) for s in list(meta.spine) + list(args)]
        if not all(isinstance(s, Var) for s in spine):
            return False
        idx = [s.idx for s in spine]
        if len(set(idx)) != len(idx):
            return False
        rhs = self.zonk(rhs)
        if meta.id in metas_in(rhs):
            from .kernel import normalize
            rhs = normalize(self.env, rhs, self.fuel(), self.lookup)
            if meta.id in metas_in(rhs):
                raise UnifyError(f"?{meta.id} occurs in the term it should be equal to",
                                 category="OccursCheck")
        decl = self.metas[meta.id]
        k = len(spine)
        body = self._rename(rhs, idx)
        if body is None:
            from .kernel import normalize
            body = self._rename(normalize(self.env, rhs, self.fuel(), self.lookup), idx)
            if body is None:
                raise UnifyError(f"solution for ?{meta.id} would mention variables out of its scope",
                                 category="ScopeError")
        value = body
        nctx = len(decl.ctx)
        for p in range(k - 1, -1, -1):
            if p < nctx:
                name, dom = decl.ctx[p]
            else:
                name = ctx[len(ctx) - 1 - idx[p]][0] if idx[p] < len(ctx) else "x"
                dom = self._rename(lift(ctx[len(ctx) - 1 - idx[p]][1], 0, idx[p] + 1), idx[:p]) \
                    if idx[p] < len(ctx) else None
                if dom is None:
                    dom = Sort(0)
            value = Lam(name, dom, value)
        self.assign(meta.id, value)
        return True

    def _rename(self, t: Term, idx: list[int]) -> Term | None:
        """Re-express ``t`` over binders standing for the variables ``idx`` (outermost first)."""
        k = len(idx)
        pos = {v: k - 1 - p for p, v in enumerate(idx)}
        failed = False

        def go(i: int, depth: int) -> Term:
            nonlocal failed
            if i < depth:
                return Var(i)
            j = pos.get(i - depth)
            if j is None:
                failed = True
                return Var(i)
            return Var(j + depth)

        out = map_vars(t, go)
        return None if failed else out

    # -- hints -------------------------------------------------------------

    def hint_lookup(self, projection: str, key) -> str | None:
        if key is None:
            return None
        return self.env.hints.get((projection, key))


def _beta(fn: Term, arg: Term) -> Term:
    if isinstance(fn, Lam):
        from .term import instantiate
        return instantiate(fn.body, arg)
    return App(fn, arg)


def _rebuild(orig: Term, head: Term, args: list[Term]) -> Term:
    # keep the coercion marks of the original spine
    flags = []
    t = orig
    while isinstance(t, App):
        flags.append(t.coe)
        t = t.fn
    flags.reverse()
    out = head
    for a, coe in zip(args, flags):
        out = App(out, a, coe)
    return out


class _Solver:
    """Works one constraint to completion, recursing into sub-constraints."""

    def __init__(self, state: ElabState, root: Constraint):
        self.st = state
        self.root = root
        self.budget = state.unify_fuel

    def run(self) -> None:
        c = self.root
        self.solve(c.ctx, c.lhs, c.rhs, c.cumul, c.span)

    # -- tracing -----------------------------------------------------------

    def record(self, ctx: Context, t: Term, u: Term, resource: int, action: str, result: str,
               span: Span | None, **extra) -> None:
        tr = self.st.tracer
        rec: dict = {}
        if tr.wants("unify"):
            from .surface.printer import show
            names = [n for n, _ in ctx]
            rec = {"constraint": f"{show(t, self.st.env, names)} =?= {show(u, self.st.env, names)}",
                   "resource": resource, "action": action, "result": result,
                   "span": str(span) if span else None, **extra}
        tr.emit("unify", rec)

    def fail(self, ctx: Context, t: Term, u: Term, span, msg: str, category: str = "Mismatch"):
        from .surface.printer import show
        names = [n for n, _ in ctx]
        text = f"{show(t, self.st.env, names)} =?= {show(u, self.st.env, names)}"
        raise UnifyError(msg, span, category=category, constraint=text)

    def tick(self, ctx, t, u, span) -> None:
        self.budget -= 1
        if self.budget < 0:
            self.fail(ctx, t, u, span, "unification budget exhausted",
                      category="UnificationFuelExhausted")

    # -- main loop -----------------------------------------------------------

    def solve(self, ctx: Context, t: Term, u: Term, cumul: bool, span) -> None:
        st = self.st
        env = st.env
        while True:
            t = st.zonk_head(t)
            u = st.zonk_head(u)
            # (1) syntactic equality and structural decomposition
            if t == u:
                self.record(ctx, t, u, 1, "syntactic", "ok", span)
                return
            match t, u:
                case Sort(a), Sort(b):
                    if a == b or (cumul and b <= a):
                        self.record(ctx, t, u, 1, "sort", "ok", span)
                        return
                    self.record(ctx, t, u, 1, "sort", "fail", span)
                    self.fail(ctx, t, u, span, "universe mismatch")
                case Pi(n, d1, c1), Pi(_, d2, c2):
                    self.record(ctx, t, u, 1, "decompose", "ok", span)
                    self.solve(ctx, d1, d2, False, span)
                    self.solve(ctx + [(n, d1)], c1, c2, cumul, span)
                    return
                case Lam(n, d1, b1), Lam(_, d2, b2):
                    self.record(ctx, t, u, 1, "decompose", "ok", span)
                    self.solve(ctx, d1, d2, False, span)
                    self.solve(ctx + [(n, d1)], b1, b2, False, span)
                    return

            t_flex = _flex_head(st, t)
            u_flex = _flex_head(st, u)
            # (2) flexible sides
            if t_flex is not None or u_flex is not None:
                if t_flex is not None and u_flex is not None:
                    self.record(ctx, t, u, 2, "postpone", "flex-flex", span)
                    st.postpone(Constraint(ctx, t, u, span, cumul), "flex-flex")
                    return
                flex, rigid = (t, u) if t_flex is not None else (u, t)
                head, args = unfold_app(flex)
                try:
                    solved = st.solve_pattern(ctx, head, args, rigid)
                except UnifyError as e:
                    self.record(ctx, t, u, 2, e.category.lower(), "fail", span)
                    self.fail(ctx, t, u, span, e.message, e.category)
                if solved:
                    self.record(ctx, t, u, 2, "assign", "ok", span, meta=head.id)
                    st.wake_postponed(head.id)
                    return
                self.record(ctx, t, u, 2, "postpone", "non-pattern", span)
                st.postpone(Constraint(ctx, t, u, span, cumul), "non-pattern")
                return

            match t, u:
                case Lam(n, d, b), _:
                    self.record(ctx, t, u, 1, "eta", "ok", span)
                    self.solve(ctx + [(n, d)], b, App(lift(u, 0, 1), Var(0)), False, span)
                    return
                case _, Lam(n, d, b):
                    self.record(ctx, t, u, 1, "eta", "ok", span)
                    self.solve(ctx + [(n, d)], App(lift(t, 0, 1), Var(0)), b, False, span)
                    return

            # (1) rigid-rigid decomposition on a shared head
            ht, at = unfold_app(t)
            hu, au = unfold_app(u)
            if _same_head(ht, hu) and len(at) == len(au):
                cp = st.checkpoint()
                try:
                    self.record(ctx, t, u, 1, "decompose", "ok", span)
                    if isinstance(ht, Meta):
                        for a, b in zip(ht.spine, hu.spine):
                            self.solve(ctx, a, b, False, span)
                    for a, b in zip(at, au):
                        self.solve(ctx, a, b, False, span)
                    return
                except UnifyError as e:
                    st.rollback(cp)
                    if e.category in ("OccursCheck", "UnificationFuelExhausted"):
                        raise
                    if not _reducible_head(env, ht):
                        self.record(ctx, t, u, 1, "mismatch", "fail", span)
                        raise
            elif _injective(env, ht) and _injective(env, hu):
                self.record(ctx, t, u, 1, "mismatch", "fail", span)
                self.fail(ctx, t, u, span, "head symbols differ")

            # (3) canonical structure hints
            hinted = self.try_hint(ctx, t, u, span) or self.try_hint(ctx, u, t, span)
            if hinted:
                continue

            # (4) reduction: beta/iota first, then delta
            self.tick(ctx, t, u, span)
            fuel = st.fuel()
            nt = step(env, t, NO_DELTA, fuel, st.lookup)
            if nt is not None:
                self.record(ctx, t, u, 4, "beta-iota", "ok", span, side="lhs")
                t = nt
                continue
            nu = step(env, u, NO_DELTA, fuel, st.lookup)
            if nu is not None:
                self.record(ctx, t, u, 4, "beta-iota", "ok", span, side="rhs")
                u = nu
                continue
            ot, ou = _def_order(env, ht), _def_order(env, hu)
            if ot is not None or ou is not None:
                if ou is None or (ot is not None and ot >= ou):
                    self.record(ctx, t, u, 4, "delta", "ok", span, unfold=ht.name)
                    t = mk_app(env.consts[ht.name].body, *at)
                else:
                    self.record(ctx, t, u, 4, "delta", "ok", span, unfold=hu.name)
                    u = mk_app(env.consts[hu.name].body, *au)
                continue

            if _stuck_on_meta(st, t) or _stuck_on_meta(st, u):
                self.record(ctx, t, u, 4, "postpone", "stuck", span)
                st.postpone(Constraint(ctx, t, u, span, cumul), "stuck")
                return
            self.record(ctx, t, u, 1, "mismatch", "fail", span)
            self.fail(ctx, t, u, span, "terms are not unifiable")

    def try_hint(self, ctx: Context, proj_side: Term, other: Term, span) -> bool:
        st = self.st
        env = st.env
        head, args = unfold_app(proj_side)
        if not isinstance(head, Const):
            return False
        info = env.lookup(head.name)
        if info is None or info.kind != "proj":
            return False
        ii = env.inductives[info.ind]
        if len(args) <= ii.nparams:
            return False
        struct = st.zonk_head(args[ii.nparams])
        if _flex_head(st, struct) is None:
            return False
        key = head_key(env, whnf(env, other, ALL, st.fuel(), st.lookup))
        inst = st.hint_lookup(head.name, key)
        if inst is None:
            self.record(ctx, proj_side, other, 3, "hint-miss", "none", span,
                        projection=head.name, key=key_str(key) if key else None)
            return False
        self.record(ctx, proj_side, other, 3, "hint", "ok", span, projection=head.name,
                    key=key_str(key), hint=inst)
        self.solve(ctx, struct, Const(inst), False, span)
        return True


def _flex_head(st: ElabState, t: Term) -> Meta | None:
    head = t
    while isinstance(head, App):
        head = head.fn
    if isinstance(head, Meta) and not st.is_assigned(head.id):
        return head
    return None


def _same_head(a: Term, b: Term) -> bool:
    match a, b:
        case Var(i), Var(j):
            return i == j
        case Const(x), Const(y):
            return x == y
        case Sort(x), Sort(y):
            return x == y
        case Meta(m, s1), Meta(n, s2):
            return m == n and len(s1) == len(s2)
    return False


def _reducible_head(env: Environment, h: Term) -> bool:
    if isinstance(h, Const):
        info = env.lookup(h.name)
        return info is not None and info.kind in ("def", "rec", "proj")
    return isinstance(h, Lam)


def _injective(env: Environment, h: Term) -> bool:
    """Rigid heads that no reduction or hint can change."""
    if isinstance(h, (Var, Sort, Pi)):
        return True
    if isinstance(h, Const):
        info = env.lookup(h.name)
        return info is not None and info.kind in ("axiom", "ind", "ctor")
    return False


def _def_order(env: Environment, h: Term) -> int | None:
    if isinstance(h, Const):
        info = env.lookup(h.name)
        if info is not None and info.kind == "def":
            return info.order
    return None


def _stuck_on_meta(st: ElabState, t: Term) -> bool:
    """Head is a recursor or projection whose major premise is an unknown."""
    env = st.env
    head, args = unfold_app(t)
    if not isinstance(head, Const):
        return False
    info = env.lookup(head.name)
    if info is None or info.kind not in ("rec", "proj"):
        return False
    ii = env.inductives[info.ind]
    pos = ii.nparams if info.kind == "proj" else ii.major_index
    if len(args) <= pos:
        return False
    major = whnf(env, args[pos], ALL, st.fuel(), st.lookup)
    if _flex_head(st, major) is not None:
        return True
    return _stuck_on_meta(st, major)
