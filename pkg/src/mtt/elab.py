"""Bidirectional elaboration and vernacular command processing."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from . import kernel
from .diagnostics import Diagnostic, ElabError, KernelError, MttError, Span, UnifyError
from .env import (
    Axiom, CanonicalHint, CoercionClass, CoercionEdge, Definition, Environment, Funclass,
    ImplicitMarking, Inductive, Named, NotationEntry, Record, Sortclass, declare, head_key,
)
from .kernel import ALL, NO_DELTA, whnf
from .surface.printer import show
from .surface.syntax import (
    Binder, CAxiom, CCanonical, CCheck, CCoercion, CDefinition, CEval, CFail, CInductive,
    CNotation, Command, CRecord, SApp, SArrow, SAscribe, SExplicit, SHole, SLam, SNum, SOp, SPi,
    SSort, SurfaceTerm, SVar, span_of,
)
from .term import (
    App, Const, Lam, Meta, Pi, Sort, Term, Var, instantiate, lift, mk_app, pi_level, unfold_app,
)
from .unify import DEFAULT_UNIFY_FUEL, Context, ElabState, Tracer

_HARD = ("OccursCheck", "ScopeError", "UnificationFuelExhausted")


@dataclass
class Options:
    conv_fuel: int = kernel.DEFAULT_CONV_FUEL
    unify_fuel: int = DEFAULT_UNIFY_FUEL
    explicit: bool = False


def _flatten(binders: tuple[Binder, ...], span) -> list[tuple[str, SurfaceTerm, bool]]:
    out = []
    for b in binders:
        for n in b.names:
            out.append((n, b.type if b.type is not None else SHole(b.span or span), b.implicit))
    return out


def _leading_implicits(s: SurfaceTerm | None) -> list[bool]:
    flags: list[bool] = []
    while isinstance(s, SPi):
        for b in s.binders:
            flags.extend([b.implicit] * len(b.names))
        s = s.body
    return flags


class Elaborator:
    """Elaborates surface terms against one ``ElabState``."""

    def __init__(self, env: Environment, state: ElabState):
        self.env = env
        self.st = state

    # -- small helpers -------------------------------------------------------

    def whnf(self, t: Term, flags=ALL) -> Term:
        return whnf(self.env, self.st.zonk(t), flags, self.st.fuel(), self.st.lookup)

    def show(self, t: Term, ctx: Context) -> str:
        return show(self.st.zonk(t), self.env, [n for n, _ in ctx])

    def trace_elab(self, ctx: Context, action: str, detail: str, span, result: str = "ok") -> None:
        tr = self.st.tracer
        rec = {}
        if tr.wants("elab"):
            rec = {"constraint": detail, "resource": 2, "action": action, "result": result,
                   "span": str(span) if span else None}
        tr.emit("elab", rec)

    def unify(self, ctx: Context, lhs: Term, rhs: Term, span, cumul: bool = False) -> None:
        self.st.unify(ctx, lhs, rhs, span, cumul)

    # -- notation ------------------------------------------------------------

    def expand_op(self, s: SOp) -> SurfaceTerm:
        if s.op == "=":
            return SApp(SVar("eq", s.span), (SHole(s.span), s.lhs, s.rhs), s.span)
        if s.op == "->":
            return SArrow(s.lhs, s.rhs, s.span)
        entry = self.env.notations.get(s.op)
        if entry is None:
            raise ElabError(f"no notation is declared for {s.op!r}", s.span,
                            category="AmbiguousNotation")
        return _substitute(entry.template, {entry.lhs: s.lhs, entry.rhs: s.rhs}, s.span)

    # -- inference -----------------------------------------------------------

    def infer(self, ctx: Context, s: SurfaceTerm) -> tuple[Term, Term]:
        match s:
            case SVar(name):
                local = _lookup_local(ctx, name)
                if local is not None:
                    return local
                info = self._global(name, s.span)
                return self.insert_implicits(ctx, Const(name), info.type,
                                             self.env.implicits.get(name, ()), s.span)
            case SExplicit(name):
                local = _lookup_local(ctx, name)
                if local is not None:
                    return local
                return Const(name), self._global(name, s.span).type
            case SNum(n):
                for c in ("O", "S", "nat"):
                    self._global(c, s.span)
                t: Term = Const("O")
                for _ in range(n):
                    t = App(Const("S"), t)
                return t, Const("nat")
            case SSort(level):
                return Sort(level), Sort(level + 1)
            case SHole():
                ty = self.st.new_meta(ctx, Sort(0), "hole", s.span)
                return self.st.new_meta(ctx, ty, "hole", s.span), ty
            case SApp(fn, args):
                f, fty = self.infer(ctx, fn)
                for a in args:
                    f, fty = self.apply(ctx, f, fty, a, span_of(fn))
                return f, fty
            case SArrow(dom, cod):
                d, l1 = self.elab_type(ctx, dom)
                c, l2 = self.elab_type(ctx + [("_", d)], cod)
                return Pi("_", d, c), Sort(pi_level(l1, l2))
            case SPi(binders, body):
                t, level = self._pis(ctx, _flatten(binders, s.span), body)
                return t, Sort(level)
            case SLam(binders, body):
                return self._lams(ctx, _flatten(binders, s.span), body)
            case SOp():
                return self.infer(ctx, self.expand_op(s))
            case SAscribe(term, ty):
                want, _ = self.elab_type(ctx, ty)
                return self.check(ctx, term, want), want
        raise TypeError(f"not a surface term: {s!r}")

    def _global(self, name: str, span):
        info = self.env.lookup(name)
        if info is None:
            raise ElabError(f"unknown identifier {name}", span, category="UnknownIdentifier")
        return info

    def insert_implicits(self, ctx: Context, t: Term, ty: Term, flags, span) -> tuple[Term, Term]:
        for implicit in flags:
            if not implicit:
                break
            w = self.whnf(ty)
            if not isinstance(w, Pi):
                break
            m = self.st.new_meta(ctx, w.dom, "implicit-arg", span, name=w.name)
            t, ty = App(t, m), instantiate(w.cod, m)
        return t, ty

    def apply(self, ctx: Context, f: Term, fty: Term, arg: SurfaceTerm, span) -> tuple[Term, Term]:
        coerced = False
        while True:
            w = self.whnf(fty)
            if isinstance(w, Pi):
                a = self.check(ctx, arg, w.dom)
                return App(f, a), instantiate(w.cod, a)
            head, extra = unfold_app(w)
            if isinstance(head, Meta):
                self._unify_or_fail(ctx, fty, self._fresh_pi(ctx, head, extra, span), span, f)
                continue
            if not coerced:
                hit = self.insert_coercion(ctx, f, fty, Funclass(), span)
                if hit is not None:
                    f, fty = hit
                    coerced = True
                    continue
            raise ElabError(f"{self.show(f, ctx)} has type {self.show(fty, ctx)} and cannot be "
                            f"applied", span, category="NotAFunction")

    def _fresh_pi(self, ctx: Context, head: Meta, extra: list[Term], span) -> Pi:
        """A Pi of fresh metas to unify with an unknown function type.

        The metas live in the unknown's own context so that the assignment
        stays within its scope.
        """
        if extra:
            dom = self.st.new_meta(ctx, Sort(0), "function-type", span)
            cod = self.st.new_meta(ctx + [("x", dom)], Sort(0), "function-type", span)
            return Pi("x", dom, cod)
        mctx = self.st.metas[head.id].ctx
        d = self.st.new_meta(mctx, Sort(0), "function-type", span)
        c = self.st.new_meta(mctx + [("x", d)], Sort(0), "function-type", span)
        dom = Meta(d.id, head.spine)
        cod = Meta(c.id, tuple(lift(a, 0, 1) for a in head.spine) + (Var(0),))
        return Pi("x", dom, cod)

    def _pis(self, ctx: Context, items, body: SurfaceTerm) -> tuple[Term, int]:
        if not items:
            return self.elab_type(ctx, body)
        name, sty, _ = items[0]
        d, l1 = self.elab_type(ctx, sty)
        c, l2 = self._pis(ctx + [(name, d)], items[1:], body)
        return Pi(name, d, c), pi_level(l1, l2)

    def _lams(self, ctx: Context, items, body: SurfaceTerm) -> tuple[Term, Term]:
        if not items:
            return self.infer(ctx, body)
        name, sty, _ = items[0]
        d, _ = self.elab_type(ctx, sty)
        b, bty = self._lams(ctx + [(name, d)], items[1:], body)
        return Lam(name, d, b), Pi(name, d, bty)

    # -- checking ------------------------------------------------------------

    def check(self, ctx: Context, s: SurfaceTerm, expected: Term) -> Term:
        match s:
            case SHole():
                return self.st.new_meta(ctx, expected, "hole", s.span)
            case SOp():
                return self.check(ctx, self.expand_op(s), expected)
            case SLam(binders, body):
                items = _flatten(binders, s.span)
                w = self.whnf(expected)
                if isinstance(w, Pi):
                    name, sty, _ = items[0]
                    if isinstance(sty, SHole):
                        d = w.dom
                    else:
                        d, _ = self.elab_type(ctx, sty)
                        self._unify_or_fail(ctx, w.dom, d, span_of(sty), Var(0), what="binder")
                    rest = _rest_lambda(binders, body, s.span)
                    b = self.check(ctx + [(name, d)], rest, w.cod)
                    return Lam(name, d, b)
        t, ty = self.infer(ctx, s)
        return self.coerce_to(ctx, t, ty, expected, span_of(s))

    def coerce_to(self, ctx: Context, t: Term, have: Term, want: Term, span) -> Term:
        try:
            self.unify(ctx, want, have, span, cumul=True)
            return t
        except UnifyError as e:
            if e.category in _HARD:
                raise ElabError(e.message, span, category=e.category, constraint=e.constraint)
            failure = e
        hit = self.insert_coercion(ctx, t, have, want, span)
        if hit is not None:
            return hit[0]
        raise ElabError(f"{self.show(t, ctx)} has type {self.show(have, ctx)} but is expected to "
                        f"have type {self.show(want, ctx)}", span, category="TypeMismatch",
                        constraint=failure.constraint)

    def _unify_or_fail(self, ctx, lhs, rhs, span, t, what="term") -> None:
        try:
            self.unify(ctx, lhs, rhs, span)
        except UnifyError as e:
            cat = e.category if e.category in _HARD else "TypeMismatch"
            raise ElabError(f"{what} type {self.show(rhs, ctx)} is incompatible with "
                            f"{self.show(lhs, ctx)}", span, category=cat, constraint=e.constraint)

    def elab_type(self, ctx: Context, s: SurfaceTerm) -> tuple[Term, int]:
        """Elaborate ``s`` in a position that requires a type; returns the type and its level."""
        if isinstance(s, SHole):
            return self.st.new_meta(ctx, Sort(0), "binder-type", s.span), 0
        t, ty = self.infer(ctx, s)
        w = self.whnf(ty)
        if isinstance(w, Sort):
            return t, w.level
        head, _ = unfold_app(w)
        if isinstance(head, Meta):
            self._unify_or_fail(ctx, ty, Sort(0), span_of(s), t)
            return t, 0
        hit = self.insert_coercion(ctx, t, ty, Sortclass(), span_of(s))
        if hit is None:
            raise ElabError(f"{self.show(t, ctx)} of type {self.show(ty, ctx)} is used as a type but "
                            f"no coercion to a sort exists", span_of(s), category="NoCoercionPath")
        t, ty = hit
        w = self.whnf(ty)
        return t, w.level if isinstance(w, Sort) else 0

    # -- coercions -------------------------------------------------------------

    def target_class(self, want) -> CoercionClass | None:
        if isinstance(want, (Named, Sortclass, Funclass)):
            return want
        w = self.whnf(want)
        if isinstance(w, Sort):
            return Sortclass()
        if isinstance(w, Pi):
            return Funclass()
        head, _ = unfold_app(w)
        return Named(head.name) if isinstance(head, Const) else None

    def insert_coercion(self, ctx: Context, t: Term, have: Term, want, span
                        ) -> tuple[Term, Term] | None:
        """Apply the unique coercion path from ``have``'s class to ``want``, or return None."""
        tgt = self.target_class(want)
        if tgt is None:
            return None
        path = None
        for flags in (NO_DELTA, ALL):
            head, _ = unfold_app(self.whnf(have, flags))
            if isinstance(head, Const):
                path = self.env.coercion_paths.get((Named(head.name), tgt))
                if path:
                    break
        if not path:
            return None
        cp = self.st.checkpoint()
        cur, cur_ty = t, have
        try:
            for fn in path:
                edge = self.env.coercion_edge(fn)
                f: Term = Const(fn)
                fty = self.env.lookup(fn).type
                for _ in range(edge.nparams):
                    w = self.whnf(fty)
                    m = self.st.new_meta(ctx, w.dom, "coercion-probe", span)
                    f, fty = App(f, m), instantiate(w.cod, m)
                w = self.whnf(fty)
                self.unify(ctx, w.dom, cur_ty, span, cumul=True)
                cur, cur_ty = App(f, cur, True), instantiate(w.cod, cur)
            if not isinstance(want, (Named, Sortclass, Funclass)):
                self.unify(ctx, want, cur_ty, span, cumul=True)
        except UnifyError:
            self.st.rollback(cp)
            self.trace_elab(ctx, "coerce", f"{self.show(have, ctx)} >-> {tgt}", span, "fail")
            return None
        self.trace_elab(ctx, "coerce", f"{self.show(have, ctx)} >-> {tgt} via {'; '.join(path)}", span)
        return cur, cur_ty

    # -- finalization ----------------------------------------------------------

    def finalize(self, terms: list[Term]) -> list[Diagnostic]:
        st = self.st
        try:
            st.wake_all()
        except UnifyError as e:
            return [e.diagnostic()]
        diags: list[Diagnostic] = []
        reported: set[int] = set()
        seen: set[str] = set()
        for c in st.postponed:
            names = [n for n, _ in c.ctx]
            text = f"{show(st.zonk(c.lhs), self.env, names)} =?= {show(st.zonk(c.rhs), self.env, names)}"
            reported |= st.unassigned_in(c.lhs) | st.unassigned_in(c.rhs)
            if text in seen:
                continue
            seen.add(text)
            if c.reason == "stuck":
                diags.append(Diagnostic("StuckConstraint", "unification is stuck: no reduction or "
                                        "canonical instance applies", c.span, text))
            else:
                diags.append(Diagnostic("UnresolvedMeta", f"constraint left unsolved ({c.reason})",
                                        c.span, text))
        for t in terms:
            for m in sorted(st.unassigned_in(t)):
                if m in reported:
                    continue
                reported.add(m)
                decl = st.metas[m]
                label = f" {decl.name}" if decl.name and decl.name != "_" else ""
                diags.append(Diagnostic("UnresolvedMeta",
                                        f"cannot infer ?{m}{label} ({decl.origin})", decl.span))
        return diags

    def finalize_or_raise(self, terms: list[Term]) -> None:
        diags = self.finalize(terms)
        if diags:
            d = diags[0]
            raise ElabError(d.message, d.span, category=d.category, constraint=d.constraint,
                            extra=tuple(diags[1:]))


def _lookup_local(ctx: Context, name: str) -> tuple[Term, Term] | None:
    for i in range(len(ctx) - 1, -1, -1):
        if ctx[i][0] == name:
            idx = len(ctx) - 1 - i
            return Var(idx), lift(ctx[i][1], 0, idx + 1)
    return None


def _rest_lambda(binders: tuple[Binder, ...], body: SurfaceTerm, span) -> SurfaceTerm:
    first = binders[0]
    rest = list(binders[1:])
    if len(first.names) > 1:
        rest.insert(0, Binder(first.names[1:], first.type, first.implicit, first.span))
    return SLam(tuple(rest), body, span) if rest else body


def _substitute(tpl: SurfaceTerm, mapping: dict, span) -> SurfaceTerm:
    match tpl:
        case SVar(n) if n in mapping:
            return mapping[n]
        case SVar(n):
            return SVar(n, span)
        case SHole():
            return SHole(span)
        case SApp(fn, args):
            return SApp(_substitute(fn, mapping, span),
                        tuple(_substitute(a, mapping, span) for a in args), span)
        case SArrow(d, c):
            return SArrow(_substitute(d, mapping, span), _substitute(c, mapping, span), span)
        case SOp(op, l, r):
            return SOp(op, _substitute(l, mapping, span), _substitute(r, mapping, span), span)
        case SAscribe(t, ty):
            return SAscribe(_substitute(t, mapping, span), _substitute(ty, mapping, span), span)
    return tpl


# ---------------------------------------------------------------------------
# Commands

@dataclass
class CommandResult:
    kind: str
    name: str | None
    span: Span | None
    output: list[str] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    # closed (term, type) pairs produced by elaboration, for re-checking
    elaborated: list[tuple[Term, Term]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def _pis_of(ctx: Context, body: Term) -> Term:
    for name, ty in reversed(ctx):
        body = Pi(name, ty, body)
    return body


def _lams_of(ctx: Context, body: Term) -> Term:
    for name, ty in reversed(ctx):
        body = Lam(name, ty, body)
    return body


class Session:
    """Processes the commands of one file against an evolving environment."""

    def __init__(self, env: Environment, options: Options | None = None,
                 tracer: Tracer | None = None):
        self.env = env
        self.options = options or Options()
        self.tracer = tracer or Tracer()
        self.ids: Iterator[int] = itertools.count(1)

    def _state(self, env: Environment) -> tuple[Elaborator, ElabState]:
        st = ElabState(env, tracer=self.tracer, ids=self.ids, unify_fuel=self.options.unify_fuel,
                       conv_fuel=self.options.conv_fuel)
        return Elaborator(env, st), st

    def _fuel(self) -> kernel.Fuel:
        return kernel.Fuel(self.options.conv_fuel)

    def process(self, cmd: Command) -> CommandResult:
        res = CommandResult(type(cmd).__name__[1:], getattr(cmd, "name", None), span_of(cmd))
        try:
            self.env = self._run(cmd, self.env, res)
        except MttError as e:
            diag = e.diagnostic()
            if diag.span is None:
                diag = Diagnostic(diag.category, diag.message, span_of(cmd), diag.constraint)
            res.diagnostics.append(diag)
            res.diagnostics.extend(e.extra)
        return res

    def _run(self, cmd: Command, env: Environment, res: CommandResult) -> Environment:
        match cmd:
            case CDefinition():
                return self._definition(cmd, env, res)
            case CAxiom():
                return self._axiom(cmd, env, res)
            case CInductive():
                return self._inductive(cmd, env, res)
            case CRecord():
                return self._record(cmd, env, res)
            case CCoercion():
                return self._coercion(cmd, env, res)
            case CCanonical():
                return self._canonical(cmd, env, res)
            case CNotation():
                entry = NotationEntry(cmd.token, cmd.level, cmd.assoc, cmd.template, cmd.lhs, cmd.rhs)
                try:
                    return declare(env, entry)
                except MttError as e:
                    raise e.with_span(cmd.span)
            case CCheck():
                self._check(cmd, env, res)
                return env
            case CEval():
                self._eval(cmd, env, res)
                return env
            case CFail():
                inner = CommandResult(res.kind, None, cmd.span)
                try:
                    self._run(cmd.command, env, inner)
                except MttError as e:
                    d = e.diagnostic()
                    res.output.append(f"failed as expected: {d.category}: {d.message}")
                    return env
                raise ElabError("the command was expected to fail but succeeded", cmd.span,
                                category="CommandDidNotFail")
        raise TypeError(f"unknown command {cmd!r}")

    # -- telescopes ------------------------------------------------------------

    def _telescope(self, el: Elaborator, binders: tuple[Binder, ...], span,
                   ctx: Context | None = None) -> tuple[Context, list[bool]]:
        ctx = list(ctx or [])
        flags = []
        for name, sty, implicit in _flatten(binders, span):
            d, _ = el.elab_type(ctx, sty)
            ctx.append((name, d))
            flags.append(implicit)
        return ctx, flags

    def _close(self, st: ElabState, ctx: Context) -> Context:
        return [(n, st.zonk(t)) for n, t in ctx]

    def _kernel(self, env: Environment, fn, span):
        try:
            return fn()
        except KernelError as e:
            raise e.with_span(e.span or span)

    # -- declarations ----------------------------------------------------------

    def _definition(self, cmd: CDefinition, env: Environment, res: CommandResult) -> Environment:
        el, st = self._state(env)
        ctx, flags = self._telescope(el, cmd.binders, cmd.span)
        if cmd.type is not None:
            ty, _ = el.elab_type(ctx, cmd.type)
            body = el.check(ctx, cmd.body, ty)
        else:
            body, ty = el.infer(ctx, cmd.body)
        el.finalize_or_raise([body, ty] + [t for _, t in ctx])
        ctx = self._close(st, ctx)
        full_ty = _pis_of(ctx, st.zonk(ty))
        full_body = _lams_of(ctx, st.zonk(body))
        self._kernel(env, lambda: self._recheck(env, full_body, full_ty), cmd.span)
        res.elaborated.append((full_body, full_ty))
        env = self._declare(env, Definition(cmd.name, full_ty, full_body), cmd.span)
        flags = flags + _leading_implicits(cmd.type)
        if any(flags):
            env = declare(env, ImplicitMarking(cmd.name, tuple(flags)))
        res.output.append(f"{cmd.name} is defined")
        return env

    def _recheck(self, env: Environment, term: Term, ty: Term) -> None:
        kernel.sort_of(env, [], ty, self._fuel())
        got = kernel.infer_type(env, [], term, self._fuel())
        if not kernel.is_sub(env, got, ty, self._fuel()):
            raise KernelError(f"kernel computed type {show(got, env)} which does not match "
                              f"{show(ty, env)}", category="TypeMismatch")

    def _declare(self, env: Environment, d, span) -> Environment:
        try:
            return declare(env, d)
        except MttError as e:
            raise e.with_span(e.span or span)

    def _axiom(self, cmd: CAxiom, env: Environment, res: CommandResult) -> Environment:
        el, st = self._state(env)
        ctx, flags = self._telescope(el, cmd.binders, cmd.span)
        ty, _ = el.elab_type(ctx, cmd.type)
        el.finalize_or_raise([ty] + [t for _, t in ctx])
        full_ty = _pis_of(self._close(st, ctx), st.zonk(ty))
        self._kernel(env, lambda: kernel.sort_of(env, [], full_ty, self._fuel()), cmd.span)
        flags = flags + _leading_implicits(cmd.type)
        for name in cmd.names:
            res.elaborated.append((full_ty, kernel.infer_type(env, [], full_ty, self._fuel())))
            env = self._declare(env, Axiom(name, full_ty), cmd.span)
            if any(flags):
                env = declare(env, ImplicitMarking(name, tuple(flags)))
        res.output.append(f"{', '.join(cmd.names)} {'is' if len(cmd.names) == 1 else 'are'} assumed")
        return env

    def _sort_level(self, el: Elaborator, ctx: Context, s: SurfaceTerm) -> int:
        t, _ = el.infer(ctx, s)
        w = el.whnf(t)
        if not isinstance(w, Sort):
            raise ElabError("the declared sort must be Prop or Type", span_of(s), category="SortError")
        return w.level

    def _inductive(self, cmd: CInductive, env: Environment, res: CommandResult) -> Environment:
        el, st = self._state(env)
        params, _ = self._telescope(el, cmd.params, cmd.span)
        level = self._sort_level(el, params, cmd.sort)
        el.finalize_or_raise([t for _, t in params])
        params = self._close(st, params)
        # constructor types see the type being defined as an opaque constant
        tmp = self._declare(env, Axiom(cmd.name, _pis_of(params, Sort(level))), cmd.span)
        el, st = self._state(tmp)
        ctors = []
        for c in cmd.ctors:
            ty, _ = el.elab_type(params, c.type)
            el.finalize_or_raise([ty])
            ctors.append((c.name, st.zonk(ty)))
        for c, (name, ty) in zip(cmd.ctors, ctors):
            self._kernel(tmp, lambda: self._check_ctor_universe(tmp, params, ty, level, name), c.span)
        env = self._declare(env, Inductive(cmd.name, tuple(params), level, tuple(ctors)), cmd.span)
        res.output.append(f"{cmd.name} is defined")
        return env

    def _check_ctor_universe(self, env: Environment, params: Context, ty: Term, level: int,
                             name: str) -> None:
        ctx = list(params)
        kernel.sort_of(env, ctx, ty, self._fuel())
        while isinstance(ty, Pi):
            lv = kernel.sort_of(env, ctx, ty.dom, self._fuel())
            if level >= 0 and lv > level:
                raise KernelError(f"constructor {name} has an argument in Type@{{{lv}}}, too large "
                                  f"for the declared universe", category="SortError")
            ctx.append((ty.name, ty.dom))
            ty = ty.cod

    def _record(self, cmd: CRecord, env: Environment, res: CommandResult) -> Environment:
        el, st = self._state(env)
        params, _ = self._telescope(el, cmd.params, cmd.span)
        level = self._sort_level(el, params, cmd.sort)
        ctx = list(params)
        for f in cmd.fields:
            ty, _ = el.elab_type(ctx, f.type)
            ctx.append((f.name, ty))
        el.finalize_or_raise([t for _, t in ctx])
        ctx = self._close(st, ctx)
        params, fields = ctx[:len(params)], ctx[len(params):]
        if level >= 0:
            # the record lives in the smallest universe that fits every field
            probe = list(params)
            for fname, fty in fields:
                lv = self._kernel(env, lambda: kernel.sort_of(env, probe, fty, self._fuel()), cmd.span)
                level = max(level, lv)
                probe.append((fname, fty))
        env = self._declare(env, Record(cmd.name, tuple(params), level, cmd.ctor, tuple(fields)),
                            cmd.span)
        res.output.append(f"{cmd.name} is defined")
        return env

    def _coercion(self, cmd: CCoercion, env: Environment, res: CommandResult) -> Environment:
        info = env.lookup(cmd.fn)
        if info is None:
            raise ElabError(f"unknown identifier {cmd.fn}", cmd.span, category="UnknownIdentifier")
        if env.lookup(cmd.source) is None:
            raise ElabError(f"unknown class {cmd.source}", cmd.span, category="UnknownIdentifier")
        target: CoercionClass
        if cmd.target in ("Type", "Sortclass"):
            target = Sortclass()
        elif cmd.target == "Funclass":
            target = Funclass()
        else:
            if env.lookup(cmd.target) is None:
                raise ElabError(f"unknown class {cmd.target}", cmd.span, category="UnknownIdentifier")
            target = Named(cmd.target)
        fuel = self._fuel()
        ty = whnf(env, info.type, ALL, fuel)
        binders = []
        while isinstance(ty, Pi):
            binders.append(ty.dom)
            ty = whnf(env, ty.cod, ALL, fuel)
            # a function-producing coercion keeps the Pis of its result
            if isinstance(target, Funclass) and self._has_class(env, binders[-1], cmd.source, fuel):
                break
        bad = None
        if not binders:
            bad = f"{cmd.fn} is not a function"
        else:
            if not self._has_class(env, binders[-1], cmd.source, fuel):
                bad = f"the last argument of {cmd.fn} does not have class {cmd.source}"
            match target:
                case Sortclass() if not isinstance(ty, Sort):
                    bad = f"{cmd.fn} does not produce a type"
                case Funclass() if not isinstance(ty, Pi):
                    bad = f"{cmd.fn} does not produce a function"
                case Named(n) if unfold_app(ty)[0] != Const(n):
                    bad = f"{cmd.fn} does not produce an element of {n}"
        if bad:
            raise ElabError(bad, cmd.span, category="BadCoercionTarget")
        edge = CoercionEdge(cmd.fn, Named(cmd.source), target, len(binders) - 1)
        env = self._declare(env, edge, cmd.span)
        res.output.append(f"{cmd.fn} is now a coercion")
        return env

    @staticmethod
    def _has_class(env: Environment, dom: Term, cls: str, fuel) -> bool:
        return unfold_app(whnf(env, dom, ALL, fuel))[0] == Const(cls)

    def _canonical(self, cmd: CCanonical, env: Environment, res: CommandResult) -> Environment:
        info = env.lookup(cmd.name)
        if info is None:
            raise ElabError(f"unknown identifier {cmd.name}", cmd.span, category="UnknownIdentifier")
        fuel = self._fuel()
        rty = whnf(env, info.type, ALL, fuel)
        head, _ = unfold_app(rty)
        ii = env.inductives.get(head.name) if isinstance(head, Const) else None
        if ii is None or not ii.is_record:
            raise ElabError(f"{cmd.name} is not an instance of a record type", cmd.span,
                            category="TypeMismatch")
        value = whnf(env, Const(cmd.name), ALL, fuel)
        vhead, vargs = unfold_app(value)
        if vhead != Const(ii.ctors[0]):
            raise ElabError(f"{cmd.name} does not reduce to a record value", cmd.span,
                            category="TypeMismatch")
        keys = []
        for proj, v in zip(ii.projections, vargs[ii.nparams:]):
            key = head_key(env, whnf(env, v, ALL, fuel))
            if key is not None:
                env = self._declare(env, CanonicalHint(proj, key, cmd.name), cmd.span)
                keys.append(proj)
        res.output.append(f"{cmd.name} is canonical for {', '.join(keys)}")
        return env

    # -- queries ---------------------------------------------------------------

    def elaborate_closed(self, env: Environment, s: SurfaceTerm) -> tuple[Term, Term]:
        el, st = self._state(env)
        t, ty = el.infer([], s)
        el.finalize_or_raise([t, ty])
        t, ty = st.zonk(t), st.zonk(ty)
        self._kernel(env, lambda: self._recheck(env, t, ty), span_of(s))
        return t, ty

    def _check(self, cmd: CCheck, env: Environment, res: CommandResult) -> None:
        term = cmd.term
        if isinstance(term, SVar) and term.name in env:
            # a lone constant is shown with its full statement
            term = SExplicit(term.name, term.span)
        t, ty = self.elaborate_closed(env, term)
        res.elaborated.append((t, ty))
        ex = self.options.explicit
        res.output.append(f"{show(t, env, explicit=ex)} : {show(ty, env, explicit=ex)}")

    def _eval(self, cmd: CEval, env: Environment, res: CommandResult) -> None:
        t, ty = self.elaborate_closed(env, cmd.term)
        res.elaborated.append((t, ty))
        nf = self._kernel(env, lambda: kernel.normalize(env, t, self._fuel()), cmd.span)
        ex = self.options.explicit
        res.output.append(f"{show(nf, env, explicit=ex)} : {show(ty, env, explicit=ex)}")
