"""Global declarations and the environment built from them.

An ``Environment`` is never mutated after construction: ``declare`` returns a
fresh copy.  Records and inductives expand at declaration time into the
constants they imply (type former, constructors, recursor, projections) and
the reduction metadata the kernel needs for iota steps.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Union

from .diagnostics import DeclError
from .term import (
    App, Const, Meta, Pi, Sort, Term, Var, free_vars, instantiate_many, lift, mk_app, mk_pi,
    subterms, unfold_app,
)

# Universe of recursor motives.  Large enough for every elimination the
# prelude performs (type-valued recursion such as ``Vec`` lands in Type 1).
MOTIVE_LEVEL = 3
# Universe of the carrier argument of the built-in equality.
EQ_LEVEL = 2


# ---------------------------------------------------------------------------
# Declarations

@dataclass(frozen=True)
class Definition:
    name: str
    type: Term
    body: Term


@dataclass(frozen=True)
class Axiom:
    name: str
    type: Term


@dataclass(frozen=True)
class Inductive:
    """Parameters and constructor types live in the parameter context.

    Constructor types refer to the type being defined as ``Const(name)``.
    """

    name: str
    params: tuple[tuple[str, Term], ...]
    sort: int
    constructors: tuple[tuple[str, Term], ...]
    rec_name: str = ""


@dataclass(frozen=True)
class Record:
    name: str
    params: tuple[tuple[str, Term], ...]
    sort: int
    ctor_name: str
    fields: tuple[tuple[str, Term], ...]


@dataclass(frozen=True)
class EqBuiltin:
    """The equality type former with its reflexivity proof and eliminator."""

    name: str = "eq"
    refl: str = "eq_refl"
    rec: str = "eq_rec"


@dataclass(frozen=True)
class Named:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Sortclass:
    def __str__(self) -> str:
        return "Sortclass"


@dataclass(frozen=True)
class Funclass:
    def __str__(self) -> str:
        return "Funclass"


CoercionClass = Union[Named, Sortclass, Funclass]


@dataclass(frozen=True)
class CoercionEdge:
    fn: str
    source: CoercionClass
    target: CoercionClass
    # number of leading arguments before the coerced one
    nparams: int = 0


@dataclass(frozen=True)
class ConstKey:
    name: str


@dataclass(frozen=True)
class SortKey:
    pass


@dataclass(frozen=True)
class PiKey:
    pass


HeadKey = Union[ConstKey, SortKey, PiKey]


def key_str(key: HeadKey) -> str:
    match key:
        case ConstKey(n):
            return n
        case SortKey():
            return "<sort>"
        case PiKey():
            return "<pi>"
    raise TypeError(key)


@dataclass(frozen=True)
class CanonicalHint:
    projection: str
    key: HeadKey
    instance: str


@dataclass(frozen=True)
class NotationEntry:
    token: str
    level: int
    assoc: str  # "left" | "right" | "none"
    template: object  # surface term; holes are the names lhs/rhs
    lhs: str
    rhs: str


@dataclass(frozen=True)
class ImplicitMarking:
    name: str
    flags: tuple[bool, ...]


Declaration = Union[Definition, Axiom, Inductive, Record, EqBuiltin, CoercionEdge,
                    CanonicalHint, NotationEntry, ImplicitMarking]


# ---------------------------------------------------------------------------
# Derived constant information

@dataclass(frozen=True)
class ConstInfo:
    name: str
    type: Term
    kind: str  # def | axiom | ind | ctor | rec | proj
    order: int
    body: Term | None = None
    ind: str | None = None
    index: int = 0  # constructor index, or field index for projections


@dataclass(frozen=True)
class IndInfo:
    name: str
    nparams: int
    nindices: int
    ctors: tuple[str, ...]
    ctor_nargs: tuple[int, ...]
    ctor_rec_args: tuple[tuple[int, ...], ...]
    rec_name: str
    is_record: bool = False
    projections: tuple[str, ...] = ()

    @property
    def major_index(self) -> int:
        return self.nparams + 1 + len(self.ctors) + self.nindices


def head_key(env: Environment, t: Term) -> HeadKey | None:
    """Key of a term already in weak-head-normal form."""
    head, _ = unfold_app(t)
    match head:
        case Const(n):
            return ConstKey(n)
        case Sort():
            return SortKey()
        case Pi():
            return PiKey()
    return None


@dataclass
class Environment:
    decls: tuple[Declaration, ...] = ()
    consts: dict[str, ConstInfo] = field(default_factory=dict)
    inductives: dict[str, IndInfo] = field(default_factory=dict)
    coercions: tuple[CoercionEdge, ...] = ()
    coercion_paths: dict[tuple[CoercionClass, CoercionClass], tuple[str, ...]] = field(default_factory=dict)
    hints: dict[tuple[str, HeadKey], str] = field(default_factory=dict)
    notations: dict[str, NotationEntry] = field(default_factory=dict)
    implicits: dict[str, tuple[bool, ...]] = field(default_factory=dict)

    def __contains__(self, name: str) -> bool:
        return name in self.consts

    def lookup(self, name: str) -> ConstInfo | None:
        return self.consts.get(name)

    def copy(self) -> Environment:
        return Environment(self.decls, dict(self.consts), dict(self.inductives), self.coercions,
                           dict(self.coercion_paths), dict(self.hints), dict(self.notations),
                           dict(self.implicits))

    def coercion_edge(self, fn: str) -> CoercionEdge | None:
        for e in self.coercions:
            if e.fn == fn:
                return e
        return None

    def structural_summary(self) -> tuple:
        """Everything observable about the environment, for rebuild comparisons."""
        return (self.decls, tuple(sorted(self.consts.items())), tuple(sorted(self.inductives.items())),
                self.coercions, tuple(sorted(self.coercion_paths.items(), key=repr)),
                tuple(sorted(self.hints.items(), key=repr)),
                tuple(sorted((k, v.level, v.assoc) for k, v in self.notations.items())),
                tuple(sorted(self.implicits.items())))


def initial_env() -> Environment:
    return declare(Environment(), EqBuiltin())


def rebuild(decls) -> Environment:
    env = Environment()
    for d in decls:
        env = declare(env, d)
    return env


# ---------------------------------------------------------------------------
# declare

def declare(env: Environment, d: Declaration) -> Environment:
    new = env.copy()
    new.decls = env.decls + (d,)
    match d:
        case Definition(name, ty, body):
            _add_const(new, ConstInfo(name, ty, "def", len(new.consts), body=body))
        case Axiom(name, ty):
            _add_const(new, ConstInfo(name, ty, "axiom", len(new.consts)))
        case Inductive():
            _declare_inductive(new, d)
        case Record():
            _declare_record(new, d)
        case EqBuiltin():
            _declare_eq(new, d)
        case CoercionEdge():
            _declare_coercion(new, d)
        case CanonicalHint(proj, key, inst):
            if (proj, key) in new.hints:
                raise DeclError(f"a canonical instance for {proj} on {key_str(key)} is already "
                                f"registered ({new.hints[(proj, key)]})", category="DuplicateHint")
            new.hints[(proj, key)] = inst
        case NotationEntry(token=tok):
            if tok in new.notations:
                raise DeclError(f"notation {tok!r} is already defined", category="AmbiguousNotation")
            new.notations[tok] = d
        case ImplicitMarking(name, flags):
            new.implicits[name] = flags
        case _:
            raise TypeError(f"unknown declaration {d!r}")
    return new


def _add_const(env: Environment, info: ConstInfo) -> None:
    if info.name in env.consts:
        raise DeclError(f"{info.name} is already declared", category="DuplicateName")
    env.consts[info.name] = info


def _check_scoped(tele: tuple[tuple[str, Term], ...], base: int, what: str) -> None:
    for i, (n, ty) in enumerate(tele):
        for s in subterms(ty):
            if isinstance(s, Meta):
                raise DeclError(f"{what} {n} contains an unsolved metavariable",
                                category="IllFormedTelescope")
        limit = base + i
        bad = [v for v in free_vars(ty) if v >= limit]
        if bad:
            raise DeclError(f"{what} {n} mentions an unbound variable", category="IllFormedTelescope")


def _pis(binders: list[tuple[str, str, Term]], body: Term) -> Term:
    for name, ph, dom in reversed(binders):
        body = mk_pi(name, ph, dom, body)
    return body


_fresh = itertools.count()


def _ph(tag: str) -> str:
    return f"#{tag}{next(_fresh)}"


def _open_params(params: tuple[tuple[str, Term], ...]) -> tuple[list[tuple[str, str, Term]], list[Term]]:
    binders: list[tuple[str, str, Term]] = []
    vals: list[Term] = []
    for n, ty in params:
        ph = _ph("p")
        binders.append((n, ph, instantiate_many(ty, vals)))
        vals.append(Const(ph))
    return binders, vals


def _mentions(t: Term, name: str) -> bool:
    return any(isinstance(s, Const) and s.name == name for s in subterms(t))


def _declare_inductive(env: Environment, d: Inductive) -> None:
    rec_name = d.rec_name or f"{d.name}_rec"
    np_ = len(d.params)
    _check_scoped(d.params, 0, "parameter")
    for cname, cty in d.constructors:
        _check_scoped(((cname, cty),), np_, "constructor")
    pbinders, pvals = _open_params(d.params)
    ind_type = _pis(pbinders, Sort(d.sort))
    _add_const(env, ConstInfo(d.name, ind_type, "ind", len(env.consts), ind=d.name))
    self_app = mk_app(Const(d.name), *pvals)

    ctor_nargs: list[int] = []
    ctor_rec: list[tuple[int, ...]] = []
    opened: list[tuple[list[tuple[str, str, Term]], list[Term]]] = []
    for j, (cname, cty) in enumerate(d.constructors):
        t = instantiate_many(cty, pvals)
        args: list[tuple[str, str, Term]] = []
        avals: list[Term] = []
        rec_pos: list[int] = []
        while isinstance(t, Pi):
            ph = _ph("a")
            if t.dom == self_app:
                rec_pos.append(len(args))
            elif _mentions(t.dom, d.name):
                raise DeclError(f"constructor {cname}: {d.name} may only occur as a direct argument "
                                f"{d.name} applied to its parameters", category="NonPositive")
            args.append((t.name, ph, t.dom))
            avals.append(Const(ph))
            t = instantiate_many(t.cod, [Const(ph)])
        if t != self_app:
            raise DeclError(f"constructor {cname} must build {d.name} applied to its parameters",
                            category="IllFormedTelescope")
        full = _pis(pbinders + args, t)
        _add_const(env, ConstInfo(cname, full, "ctor", len(env.consts), ind=d.name, index=j))
        ctor_nargs.append(len(args))
        ctor_rec.append(tuple(rec_pos))
        opened.append((args, avals))

    # recursor: params, motive, one minor premise per constructor, major premise
    motive_ph = _ph("M")
    motive_ty = Pi("x", self_app, Sort(MOTIVE_LEVEL))
    minors: list[tuple[str, str, Term]] = []
    for (cname, _), (args, avals), rec_pos in zip(d.constructors, opened, ctor_rec):
        ihs = [("IH", _ph("h"), App(Const(motive_ph), avals[k])) for k in rec_pos]
        concl = App(Const(motive_ph), mk_app(Const(cname), *pvals, *avals))
        minors.append((f"f_{cname}", _ph("m"), _pis(args + ihs, concl)))
    major_ph = _ph("x")
    rec_type = _pis(pbinders + [("M", motive_ph, motive_ty)] + minors + [("x", major_ph, self_app)],
                    App(Const(motive_ph), Const(major_ph)))
    _add_const(env, ConstInfo(rec_name, rec_type, "rec", len(env.consts), ind=d.name))
    env.inductives[d.name] = IndInfo(d.name, np_, 0, tuple(c for c, _ in d.constructors),
                                     tuple(ctor_nargs), tuple(ctor_rec), rec_name)


def _declare_record(env: Environment, d: Record) -> None:
    np_ = len(d.params)
    _check_scoped(d.params, 0, "parameter")
    _check_scoped(d.fields, np_, "field")
    for fname, fty in d.fields:
        if _mentions(fty, d.name):
            raise DeclError(f"field {fname} may not mention {d.name}", category="NonPositive")
    # constructor type in parameter context: forall fields, R params
    self_in_ctx = mk_app(Const(d.name), *[Var(np_ - 1 - i) for i in range(np_)])
    ctor_ty: Term = lift(self_in_ctx, 0, len(d.fields))
    for fname, fty in reversed(d.fields):
        ctor_ty = Pi(fname, fty, ctor_ty)
    _declare_inductive(env, Inductive(d.name, d.params, d.sort, ((d.ctor_name, ctor_ty),)))

    pbinders, pvals = _open_params(d.params)
    rph = _ph("r")
    rname = d.name[:1].upper() if d.name[:1].isalpha() else "r"
    struct = Const(rph)
    self_app = mk_app(Const(d.name), *pvals)
    vals: list[Term] = list(pvals)
    projs: list[str] = []
    for i, (fname, fty) in enumerate(d.fields):
        field_ty = instantiate_many(fty, vals)
        proj_ty = _pis(pbinders + [(rname, rph, self_app)], field_ty)
        _add_const(env, ConstInfo(fname, proj_ty, "proj", len(env.consts), ind=d.name, index=i))
        vals.append(mk_app(Const(fname), *pvals, struct))
        projs.append(fname)
    info = env.inductives[d.name]
    env.inductives[d.name] = IndInfo(info.name, info.nparams, 0, info.ctors, info.ctor_nargs,
                                     info.ctor_rec_args, info.rec_name, True, tuple(projs))


def _declare_eq(env: Environment, d: EqBuiltin) -> None:
    A = Sort(EQ_LEVEL)
    # eq : forall A : Type, A -> A -> Prop
    eq_ty = Pi("A", A, Pi("x", Var(0), Pi("y", Var(1), Sort(-1))))
    _add_const(env, ConstInfo(d.name, eq_ty, "ind", len(env.consts), ind=d.name))
    # eq_refl : forall A (x : A), eq A x x
    refl_ty = Pi("A", A, Pi("x", Var(0), mk_app(Const(d.name), Var(1), Var(0), Var(0))))
    _add_const(env, ConstInfo(d.refl, refl_ty, "ctor", len(env.consts), ind=d.name, index=0))
    a, x, m, p, y, e = (_ph(s) for s in "AxMpye")
    eq_xy = mk_app(Const(d.name), Const(a), Const(x), Const(y))
    motive_ty = mk_pi("y", y, Const(a), Pi("e", eq_xy, Sort(MOTIVE_LEVEL)))
    refl_case = mk_app(Const(m), Const(x), mk_app(Const(d.refl), Const(a), Const(x)))
    rec_ty = _pis([("A", a, A), ("x", x, Const(a)), ("M", m, motive_ty), ("p", p, refl_case),
                   ("y", y, Const(a)), ("e", e, eq_xy)],
                  mk_app(Const(m), Const(y), Const(e)))
    _add_const(env, ConstInfo(d.rec, rec_ty, "rec", len(env.consts), ind=d.name))
    # parameters A x, one index y; eq_refl carries no further arguments
    env.inductives[d.name] = IndInfo(d.name, 2, 1, (d.refl,), (0,), ((),), d.rec)


# ---------------------------------------------------------------------------
# Coercions

def _declare_coercion(env: Environment, edge: CoercionEdge) -> None:
    if env.coercion_edge(edge.fn) is not None:
        raise DeclError(f"{edge.fn} is already a coercion", category="DuplicateCoercionPath")
    if edge.source == edge.target:
        raise DeclError(f"coercion {edge.fn} has identical source and target", category="BadCoercionTarget")
    edges = env.coercions + (edge,)
    env.coercion_paths = compute_paths(edges)
    env.coercions = edges


def compute_paths(edges: tuple[CoercionEdge, ...]) -> dict[tuple[CoercionClass, CoercionClass], tuple[str, ...]]:
    """All composite paths; raises when some class pair is joined by two distinct paths."""
    out: dict[tuple[CoercionClass, CoercionClass], tuple[str, ...]] = {}
    sources = {e.source for e in edges}

    def walk(start: CoercionClass, node: CoercionClass, path: tuple[str, ...], seen: set) -> None:
        for e in edges:
            if e.source != node or e.target in seen:
                continue
            p = path + (e.fn,)
            key = (start, e.target)
            if key in out and out[key] != p:
                raise DeclError(f"coercion path {'; '.join(p)} from {start} to {e.target} conflicts "
                                f"with existing path {'; '.join(out[key])}", category="DuplicateCoercionPath")
            out[key] = p
            walk(start, e.target, p, seen | {e.target})

    for s in sorted(sources, key=str):
        walk(s, s, (), {s})
    return out
