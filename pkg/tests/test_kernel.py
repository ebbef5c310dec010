import pytest

from conftest import elaborate, extend
from mtt.diagnostics import FuelExhausted, KernelError
from mtt.kernel import (
    NO_DELTA, Fuel, check, infer_type, is_def_eq, is_sub, normalize, sort_of, whnf,
)
from mtt.surface.printer import show
from mtt.term import App, Const, Lam, Pi, Sort, Var, mk_app

NAT = Const("nat")


def num(n):
    t = Const("O")
    for _ in range(n):
        t = App(Const("S"), t)
    return t


def test_infer_mulgA(group_env):
    t = App(Const("mulgA"), Const("G"))
    assert show(infer_type(group_env, [], t), group_env) == (
        "forall x y z : carrier G, mulg G x (mulg G y z) = mulg G (mulg G x y) z")


def test_infer_leq_trans_partial(group_env):
    t = mk_app(Const("leq_trans"), Const("a"), Const("b"), Const("c"), Const("H"))
    assert show(infer_type(group_env, [], t), group_env) == "b <= c -> a <= c"


def test_infer_sort():
    from mtt.env import initial_env
    assert infer_type(initial_env(), [], Sort(0)) == Sort(1)
    assert infer_type(initial_env(), [], Sort(-1)) == Sort(0)


def test_whnf_plus(prelude):
    w = whnf(prelude, mk_app(Const("plus"), num(2), num(2)))
    assert isinstance(w, App) and w.fn == Const("S")
    assert normalize(prelude, mk_app(Const("plus"), num(2), num(2))) == num(4)


def test_whnf_without_delta_keeps_definitions(prelude):
    t = mk_app(Const("plus"), num(0), num(1))
    assert whnf(prelude, t, NO_DELTA) == t


def test_conversion_asymmetry(prelude):
    env = extend(prelude, "Axiom n : nat.")
    n = Const("n")
    assert is_def_eq(env, mk_app(Const("plus"), num(0), n), n)
    assert not is_def_eq(env, mk_app(Const("plus"), n, num(0)), n)


def test_eta(prelude):
    f = Const("S")
    assert is_def_eq(prelude, Lam("x", NAT, App(f, Var(0))), f)


def test_cumulativity_only_upwards(prelude):
    assert is_sub(prelude, Sort(0), Sort(1))
    assert not is_sub(prelude, Sort(1), Sort(0))
    assert is_sub(prelude, Pi("x", NAT, Sort(0)), Pi("x", NAT, Sort(2)))
    assert not is_def_eq(prelude, Sort(0), Sort(1))


def test_type_errors(prelude):
    with pytest.raises(KernelError) as e:
        infer_type(prelude, [], App(Const("O"), Const("O")))
    assert e.value.category == "NotAFunction"
    with pytest.raises(KernelError) as e:
        infer_type(prelude, [], App(Const("S"), Const("true")))
    assert e.value.category == "TypeMismatch"
    with pytest.raises(KernelError) as e:
        infer_type(prelude, [], Var(0))
    assert e.value.category == "UnboundVariable"
    with pytest.raises(KernelError) as e:
        sort_of(prelude, [], Const("O"))
    assert e.value.category == "SortError"


def test_check_and_context(prelude):
    ctx = [("x", NAT)]
    check(prelude, ctx, App(Const("S"), Var(0)), NAT)
    assert infer_type(prelude, ctx, Var(0)) == NAT


def test_fuel_exhaustion(prelude):
    big = mk_app(Const("plus"), num(30), num(30))
    with pytest.raises(FuelExhausted):
        normalize(prelude, big, Fuel(5))


def test_projection_iota(canonical_env):
    t, _ = elaborate(canonical_env, "oneg IntGroup")
    assert normalize(canonical_env, t) == Const("zeroi")


def test_checker_is_deterministic_and_pure(group_env):
    before = group_env.structural_summary()
    t = App(Const("mulgA"), Const("G"))
    assert infer_type(group_env, [], t) == infer_type(group_env, [], t)
    assert group_env.structural_summary() == before


def test_subject_reduction_on_corpus_terms(corpus_elaborations):
    for env, term, _ in corpus_elaborations:
        ty = infer_type(env, [], term)
        assert is_def_eq(env, ty, infer_type(env, [], whnf(env, term)))
