from hypothesis import given, settings
from hypothesis import strategies as st

from mtt.term import (
    App, Const, Lam, Meta, Pi, Sort, Var, abstract, free_vars, has_free_var, instantiate,
    instantiate_many, lift, metas_in, mk_app, mk_pi, pi_level, prop, subst, type_, unfold_app,
)

leaves = st.one_of(
    st.builds(Var, st.integers(0, 4)),
    st.sampled_from([Const("c"), Const("d"), Sort(-1), Sort(0)]),
)


def _extend(children):
    return st.one_of(
        st.builds(App, children, children),
        st.builds(Lam, st.just("x"), children, children),
        st.builds(Pi, st.just("y"), children, children),
    )


terms = st.recursive(leaves, _extend, max_leaves=12)


def test_sort_levels():
    assert prop().level == -1 and type_(2).level == 2
    assert pi_level(0, -1) == -1
    assert pi_level(1, 0) == 1
    assert pi_level(-1, 0) == 0


def test_spines_round_trip():
    t = mk_app(Const("f"), Var(0), Const("a"))
    assert unfold_app(t) == (Const("f"), [Var(0), Const("a")])


def test_coercion_mark_is_invisible_to_equality_and_kept_by_lift():
    marked = App(Const("is_true"), Var(0), True)
    assert marked == App(Const("is_true"), Var(0))
    assert lift(marked, 0, 2).coe


def test_instantiate_under_binder():
    body = Lam("x", Const("nat"), App(Var(1), Var(0)))
    assert instantiate(body, Const("f")) == Lam("x", Const("nat"), App(Const("f"), Var(0)))


def test_instantiate_many_order():
    body = App(Var(1), Var(0))  # outer binder is Var(1)
    assert instantiate_many(body, [Const("outer"), Const("inner")]) == App(Const("outer"), Const("inner"))


def test_abstract_placeholder():
    t = mk_pi("x", "#p", Const("nat"), App(Const("f"), Const("#p")))
    assert t == Pi("x", Const("nat"), App(Const("f"), Var(0)))


def test_metas_in_spines():
    assert metas_in(App(Meta(3, (Var(0),)), Meta(5, ()))) == {3, 5}


@given(terms)
def test_lift_zero_is_identity(t):
    assert lift(t, 0, 0) == t


@given(terms, st.integers(0, 3), st.integers(0, 3))
def test_lift_composes(t, a, b):
    assert lift(lift(t, 0, a), 0, b) == lift(t, 0, a + b)


@given(terms, terms)
def test_subst_after_lift_cancels(t, u):
    assert subst(lift(t, 0, 1), 0, u) == t


@given(terms)
def test_free_vars_shift_with_lift(t):
    assert free_vars(lift(t, 0, 2)) == {i + 2 for i in free_vars(t)}


@given(terms)
@settings(max_examples=200)
def test_instantiate_removes_var_zero(t):
    out = instantiate(t, Const("k"))
    assert free_vars(out) == {i - 1 for i in free_vars(t) if i > 0}


@given(terms)
def test_abstract_then_instantiate(t):
    # abstracting a fresh placeholder and putting it back is the identity
    assert instantiate(abstract(t, "#fresh"), Const("#fresh")) == t
    assert not has_free_var(abstract(t, "#fresh"), 0) or "#fresh" in repr(t)
