"""Checks behind the acceptance suite.  Each returns (passed, detail)."""

from __future__ import annotations

import io
import os
import random
import re
import time
from contextlib import redirect_stdout
from pathlib import Path

import oracle
from conftest import CORPUS, ROOT, corpus_files, extend
from gen import FO_DECLS, NAT, RANDOM_DECLS, TermGen, fo_problem, fo_to_core, metaize, wrap_binders
from mtt.cli import load_prelude, main, run_file
from mtt.diagnostics import KernelError, UnifyError
from mtt.env import Definition
from mtt.kernel import infer_type, is_def_eq, is_sub, normalize, whnf
from mtt.term import App, Const, Lam, has_meta, mk_app, subterms
from mtt.unify import ElabState, MetaDecl

Result = tuple[bool, str]


# -- 1 ----------------------------------------------------------------------

WORKED_EXAMPLES = {
    "group_holes.mtt": ["mulg G g h : carrier G",          # mulg _ g h
                        "g : G",                            # the ascription goes through the carrier coercion
                        "mulgA G : forall x y z : carrier G, mulg G x (mulg G y z) = mulg G (mulg G x y) z"],
    "group_canonical.mtt": ["mulg IntGroup i j : carrier IntGroup"],
    "leq_implicit.mtt": ["leq_trans H1 H2 : a <= c"],
    "eqtype_nat.mtt": ["rel nat_eqType m n : bool",
                       "ax : forall (E : eqType) (x y : carrier_eq E), (x = y) = rel E x y"],
}


def golden_corpus() -> Result:
    files = corpus_files()
    problems = []
    for path in files:
        start = time.perf_counter()
        out = _cli(["check", "--deterministic", str(path.relative_to(ROOT))])
        elapsed = time.perf_counter() - start
        expected = path.with_suffix(".expected").read_text()
        if out != expected:
            problems.append(f"{path.name}: output differs from golden")
        if elapsed >= 1.0:
            problems.append(f"{path.name}: took {elapsed:.2f}s")
        for line in WORKED_EXAMPLES.get(path.name, []):
            if line not in out.splitlines():
                problems.append(f"{path.name}: missing {line!r}")
    # `g * h` goes through the notation to the same term as `mulg _ g h`
    holes = (CORPUS / "group_holes.expected").read_text().splitlines()
    if holes.count("mulg G g h : carrier G") < 2:
        problems.append("group_holes: g * h did not elaborate like mulg _ g h")
    stuck = (CORPUS / "group_no_canonical.expected").read_text()
    if not re.search(r"StuckConstraint: .*\[constraint: carrier \?\d+ =\?= int\]", stuck):
        problems.append("group_no_canonical: no StuckConstraint on carrier ? =?= int")
    explicit = _cli(["check", "--deterministic", "--explicit", str(CORPUS / "eqtype_nat.mtt")])
    if "(x = y) = is_true (rel E x y)" not in explicit:
        problems.append("eqtype_nat: is_true coercion not inserted in ax")
    ok = len(files) >= 12 and not problems
    return ok, f"{len(files)} corpus files; " + ("; ".join(problems) if problems else "all goldens match")


def _cli(argv: list[str]) -> str:
    # goldens record paths relative to the repository root
    buf = io.StringIO()
    here = os.getcwd()
    os.chdir(ROOT)
    try:
        with redirect_stdout(buf):
            main(argv)
    finally:
        os.chdir(here)
    return buf.getvalue()


# -- 2 ----------------------------------------------------------------------

def vec_asymmetry() -> Result:
    report = run_file(CORPUS / "vec_asymmetry.mtt")
    lines = report.transcript().splitlines()
    accepted = "t : Vec A (0 + n)" in lines
    rejected = any(ln.startswith("failed as expected: TypeMismatch:") and "Vec A (n + 0)" in ln
                   for ln in lines)
    ok = report.ok and accepted and rejected
    return ok, f"0 + n accepted: {accepted}; n + 0 rejected with TypeMismatch: {rejected}"


# -- 3 ----------------------------------------------------------------------

def elaboration_soundness(elaborations) -> Result:
    bad = []
    for env, term, ty in elaborations:
        try:
            if has_meta(term) or has_meta(ty):
                raise KernelError("metavariable left in output")
            got = infer_type(env, [], term)
            if not is_sub(env, got, ty):
                raise KernelError("type does not match")
        except KernelError as e:
            bad.append(f"{e.category}: {e.message}")
    return not bad and len(elaborations) > 0, \
        f"{len(elaborations) - len(bad)}/{len(elaborations)} elaborated terms re-check in the kernel"


# -- 4 ----------------------------------------------------------------------

def random_env():
    return extend(load_prelude(), RANDOM_DECLS, "<random>")


def _register(st: ElabState, decls: dict) -> None:
    for mid, ctx in decls.items():
        st.metas[mid] = MetaDecl(mid, [(f"v{i}", ty) for i, ty in enumerate(ctx)], NAT, "hole")


def _variant(rng: random.Random, gen: TermGen, env, t, nvars: int):
    r = rng.random()
    if r < 0.3:
        return t
    if r < 0.5:
        return normalize(env, t)
    if r < 0.6:
        return mk_app(Const("plus"), Const("O"), t)
    if r < 0.7:
        return App(Lam("y", NAT, _lift1(t)), Const("O"))
    return gen.nat(rng.randint(1, 4), nvars)


def _lift1(t):
    from mtt.term import lift
    return lift(t, 0, 1)


def unification_soundness(n: int = 1000, seed: int = 7) -> Result:
    env = random_env()
    rng = random.Random(seed)
    gen = TermGen(rng)
    solved = failed = postponed = violations = 0
    for _ in range(n):
        nvars = rng.randint(0, 2)
        t = gen.nat(rng.randint(1, 4), nvars)
        st = ElabState(env)
        decls: dict = {}
        lhs = metaize(rng, t, st.ids, [NAT] * nvars, decls)
        _register(st, decls)
        rhs = _variant(rng, gen, env, t, nvars)
        if rng.random() < 0.5:
            lhs, rhs = rhs, lhs
        ctx = [(f"v{i}", NAT) for i in range(nvars)]
        try:
            st.unify(ctx, lhs, rhs)
        except UnifyError:
            failed += 1
            continue
        zl, zr = st.zonk(lhs), st.zonk(rhs)
        if has_meta(zl) or has_meta(zr) or st.postponed:
            postponed += 1
            continue
        solved += 1
        if not is_def_eq(env, wrap_binders(zl, nvars), wrap_binders(zr, nvars)):
            violations += 1
    detail = (f"{n} instances: {solved} fully solved, {failed} failed, {postponed} left open; "
              f"{violations} soundness violations")
    return violations == 0 and solved > 0, detail


# -- 5 ----------------------------------------------------------------------

# hand-picked problems that need deep values or both binding orders
FO_FIXED = [
    (("f", "X", ("g", ("g", "X"))), ("f", ("g", ("g", "a")), "Y")),
    (("f", "X", "Y"), ("f", "Y", ("g", "a"))),
    (("f", "X", "X"), ("f", ("g", "Y"), ("g", "a"))),
    (("g", "X"), "X"),
    ("X", "Y"),
    (("f", "X", "b"), ("f", "a", "X")),
    (("f", ("g", "X"), "Y"), ("f", "Y", ("g", ("f", "a", "b")))),
    ("a", "b"),
]


def oracle_agreement(n: int = 600, seed: int = 11) -> Result:
    start = time.perf_counter()
    env = extend(load_prelude(), FO_DECLS, "<fo>")
    rng = random.Random(seed)
    problems = list(FO_FIXED) + [fo_problem(rng) for _ in range(n)]
    disagreements = []
    solvable = 0
    for lhs, rhs in problems:
        expected = oracle.solve(lhs, rhs) is not None
        solvable += expected
        st = ElabState(env)
        ids = {z: st.new_meta([], Const("D"), "hole").id for z in ("X", "Y")}
        cl, cr = fo_to_core(lhs, ids), fo_to_core(rhs, ids)
        try:
            st.unify([], cl, cr)
            got = True
            # leftover unknowns are unconstrained or flex-flex; close them and compare
            for mid in ids.values():
                if not st.is_assigned(mid):
                    st.assign(mid, Const("a"))
                    st.wake_all()
            if st.zonk(cl) != st.zonk(cr):
                disagreements.append((lhs, rhs, "unsound"))
                continue
        except UnifyError:
            got = False
        if got != expected:
            disagreements.append((lhs, rhs, f"oracle={expected} unifier={got}"))
    elapsed = time.perf_counter() - start
    ok = not disagreements and elapsed < 30
    return ok, (f"{len(problems)} problems ({solvable} solvable), {len(disagreements)} disagreements, "
                f"{elapsed:.1f}s")


# -- 6 ----------------------------------------------------------------------

def normalization(n: int = 500, seed: int = 3) -> Result:
    env = random_env()
    terms = []
    for d in env.decls:
        if isinstance(d, Definition):
            terms += [d.body, d.type]
    for path in corpus_files():
        report_env = _env_after(path)
        if report_env is not None:
            terms += [d.body for d in report_env.decls if isinstance(d, Definition)]
    ncorpus = len(terms)
    rng = random.Random(seed)
    gen = TermGen(rng)
    generated = 0
    ill_typed = 0
    while generated < n:
        nvars = rng.randint(0, 2)
        t = wrap_binders(gen.nat(rng.randint(1, 5), nvars), nvars)
        try:
            infer_type(env, [], t)
        except KernelError:
            ill_typed += 1
            continue
        terms.append(t)
        generated += 1
    violations = 0
    for t in terms:
        e = _env_for(env, t)
        nf = normalize(e, t)
        if normalize(e, nf) != nf or normalize(e, whnf(e, t)) != nf:
            violations += 1
    ok = violations == 0 and ill_typed == 0
    return ok, (f"{ncorpus} corpus/prelude terms + {generated} generated terms; {violations} violations; "
                f"{ill_typed} generated terms ill-typed")


_CORPUS_ENVS: dict = {}


def _env_after(path: Path):
    from mtt.cli import run_text
    if path not in _CORPUS_ENVS:
        report, env = run_text(path.read_text(), load_prelude(), str(path), keep_going=True)
        _CORPUS_ENVS[path] = env
    return _CORPUS_ENVS[path]


def _env_for(default_env, t):
    names = {s.name for s in subterms(t) if isinstance(s, Const)}
    if all(n in default_env for n in names):
        return default_env
    for env in _CORPUS_ENVS.values():
        if all(n in env for n in names):
            return env
    return default_env


# -- 7 ----------------------------------------------------------------------

def hint_before_delta() -> Result:
    report = run_file(CORPUS / "group_canonical.mtt", trace="unify")
    records = report.trace
    pat = re.compile(r"^carrier \?\d+ =\?= int$")
    hits = [i for i, r in enumerate(records) if r["resource"] == 3 and pat.match(r["constraint"])
            and r.get("hint") == "IntGroup"]
    if not hits:
        return False, "no resource-3 record for carrier ? =?= int"
    first = hits[0]
    target = records[first]["constraint"]
    # records of the same constraint before the hint fired
    same = [r for r in records[:first] if r["constraint"] == target]
    deltas = [r for r in same if r["resource"] == 4]
    counts = len(records) == report.unify_steps
    ok = not deltas and counts
    return ok, (f"resource 3 fired for {target!r} after {len(same)} earlier step(s) on it, "
                f"{len(deltas)} of them resource 4; trace records = steps: {counts}")


# -- 8 ----------------------------------------------------------------------

ERROR_CASES = {
    "group_no_canonical.mtt": ("StuckConstraint", 4, 8),
    "err_no_coercion_path.mtt": ("NoCoercionPath", 4, 11),
    "err_occurs_check.mtt": ("OccursCheck", 3, 19),
    "err_duplicate_hint.mtt": ("DuplicateHint", 5, 1),
    "err_ambiguous_coercion.mtt": ("DuplicateCoercionPath", 4, 1),
}


def error_goldens() -> Result:
    problems = []
    for name, (category, line, col) in ERROR_CASES.items():
        report = run_file(CORPUS / name)
        diags = report.diagnostics
        if len(diags) != 1:
            problems.append(f"{name}: {len(diags)} diagnostics")
            continue
        d = diags[0]
        if d.category != category or d.span is None or (d.span.line, d.span.col) != (line, col):
            where = f"{d.span.line}:{d.span.col}" if d.span else "?"
            problems.append(f"{name}: got {d.category} at {where}")
    return not problems, "; ".join(problems) if problems else \
        f"{len(ERROR_CASES)} scenarios give the designated category at the designated span"


# -- 9 ----------------------------------------------------------------------

def determinism() -> Result:
    files = [str(p.relative_to(ROOT)) for p in corpus_files()]
    outs = []
    for _ in range(2):
        trace = io.StringIO()
        import sys
        saved = sys.stderr
        sys.stderr = trace
        try:
            out = _cli(["check", "--deterministic", "--keep-going", "--trace=all", *files])
        finally:
            sys.stderr = saved
        outs.append((out, trace.getvalue()))
    same = outs[0] == outs[1]
    return same, f"two runs over {len(files)} files: stdout and trace byte-identical = {same}"
