"""Random term generators used by the property tests."""

from __future__ import annotations

import random

from mtt.term import App, Const, Lam, Meta, Pi, Term, Var, lift, mk_app

NAT = Const("nat")
BOOL = Const("bool")
NAT_TO_NAT = Pi("_", NAT, NAT)

# first-order signature for the oracle comparison: a, b : D, g : D -> D, f : D -> D -> D
FO_DECLS = """
Axiom D : Type.
Axiom a b : D.
Axiom g : D -> D.
Axiom f : D -> D -> D.
"""

# extra symbols for the randomized unification and normalization tests
RANDOM_DECLS = """
Axiom p q : nat.
Axiom h : nat -> nat.
Axiom k : nat -> nat -> nat.
Definition double (n : nat) : nat := n + n.
Definition twice (u : nat -> nat) (n : nat) : nat := u (u n).
Record pair2 : Type := Pair2 { pfst : nat; psnd : nat }.
Definition np : pair2 := Pair2 1 2.
"""


# ---------------------------------------------------------------------------
# first-order problems (tuple syntax shared with the oracle)

def fo_term(rng: random.Random, depth: int, metas: tuple[str, ...]):
    leaves = ["a", "b", *metas]
    if depth <= 1 or rng.random() < 0.3:
        return rng.choice(leaves)
    if rng.random() < 0.4:
        return ("g", fo_term(rng, depth - 1, metas))
    return ("f", fo_term(rng, depth - 1, metas), fo_term(rng, depth - 1, metas))


def fo_depth(t) -> int:
    return 1 if isinstance(t, str) else 1 + max(fo_depth(a) for a in t[1:])


def fo_problem(rng: random.Random):
    nmetas = rng.choice((0, 1, 2, 2, 2))
    metas = ("X", "Y")[:nmetas]
    lhs = fo_term(rng, 3, metas)
    if rng.random() < 0.5:
        # perturb a copy so that solvable problems are common
        rhs = _perturb(rng, lhs, metas)
    else:
        rhs = fo_term(rng, 3, metas)
    return lhs, rhs


def _perturb(rng, t, metas):
    if isinstance(t, str) or rng.random() < 0.25:
        r = rng.random()
        if r < 0.4:
            return rng.choice(["a", "b", *metas]) if metas else t
        if r < 0.6 and isinstance(t, str):
            return t
        return fo_term(rng, max(1, fo_depth(t)), metas) if rng.random() < 0.5 else t
    return (t[0],) + tuple(_perturb(rng, a, metas) for a in t[1:])


def fo_to_core(t, meta_ids: dict[str, int]) -> Term:
    if isinstance(t, str):
        if t in meta_ids:
            return Meta(meta_ids[t], ())
        return Const(t)
    return mk_app(Const(t[0]), *(fo_to_core(a, meta_ids) for a in t[1:]))


# ---------------------------------------------------------------------------
# well-typed terms over nat / bool / nat -> nat in a context of nat variables

class TermGen:
    """Generates well-typed closed-over-context core terms of a requested type."""

    def __init__(self, rng: random.Random):
        self.rng = rng

    def nat(self, depth: int, nvars: int) -> Term:
        rng = self.rng
        leaves = [Const("O"), Const("p"), Const("q")] + [Var(i) for i in range(nvars)]
        if depth <= 1:
            return rng.choice(leaves)
        choice = rng.randrange(12)
        d = depth - 1
        match choice:
            case 0:
                return rng.choice(leaves)
            case 1:
                return App(Const("S"), self.nat(d, nvars))
            case 2:
                return App(Const("h"), self.nat(d, nvars))
            case 3:
                return mk_app(Const("k"), self.nat(d, nvars), self.nat(d, nvars))
            case 4:
                return mk_app(Const("plus"), self.nat(d, nvars), self.nat(d, nvars))
            case 5:
                return App(self.fun(d, nvars), self.nat(d, nvars))
            case 6:
                return mk_app(Const("nat_rec"), Lam("_", NAT, NAT), self.nat(d, nvars),
                              Lam("n", NAT, Lam("r", NAT, self.nat(d, nvars + 2))),
                              self.nat(d, nvars))
            case 7:
                return mk_app(Const("bool_rec"), Lam("_", BOOL, NAT), self.nat(d, nvars),
                              self.nat(d, nvars), self.bool(d, nvars))
            case 8:
                return App(Const("double"), self.nat(d, nvars))
            case 9:
                return mk_app(Const("twice"), self.fun(d, nvars), self.nat(d, nvars))
            case 10:
                proj = rng.choice(["pfst", "psnd"])
                return App(Const(proj), Const("np"))
            case _:
                return mk_app(Const("iter_op"), Const("plus"), self.nat(d, nvars),
                              self.small_numeral(), self.fun(d, nvars))

    def small_numeral(self) -> Term:
        t: Term = Const("O")
        for _ in range(self.rng.randrange(3)):
            t = App(Const("S"), t)
        return t

    def fun(self, depth: int, nvars: int) -> Term:
        rng = self.rng
        if depth <= 1 or rng.random() < 0.3:
            return rng.choice([Const("S"), Const("h"), Const("double"),
                               App(Const("plus"), self.nat(1, nvars))])
        return Lam("x", NAT, self.nat(depth - 1, nvars + 1))

    def bool(self, depth: int, nvars: int) -> Term:
        rng = self.rng
        if depth <= 1 or rng.random() < 0.3:
            return rng.choice([Const("true"), Const("false")])
        d = depth - 1
        return mk_app(Const(rng.choice(["leq", "eqn"])), self.nat(d, nvars), self.nat(d, nvars))


def wrap_binders(t: Term, nvars: int) -> Term:
    """Close a term over ``nvars`` nat variables with lambdas."""
    for _ in range(nvars):
        t = Lam("v", NAT, t)
    return t


def metaize(rng: random.Random, t: Term, next_id, ctx: list[Term], decls: dict,
            rate: float = 0.25) -> Term:
    """Replace random subterms by metas whose spine is the full local context.

    ``ctx`` lists the types of the variables in scope (outermost first);
    ``decls`` receives meta id -> that context.
    """
    if rng.random() < rate and not isinstance(t, Lam):
        mid = next(next_id)
        n = len(ctx)
        decls[mid] = list(ctx)
        return Meta(mid, tuple(Var(n - 1 - i) for i in range(n)))
    match t:
        case App(fn, arg):
            return App(metaize(rng, fn, next_id, ctx, decls, rate),
                       metaize(rng, arg, next_id, ctx, decls, rate))
        case Lam(n, d, b):
            return Lam(n, d, metaize(rng, b, next_id, ctx + [d], decls, rate))
    return t
