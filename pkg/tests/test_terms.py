import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scpl.parser import parse_term
from scpl.terms import (Atom, Num, Struct, Var, is_ground, list_term, match,
                        num, render, substitute, unify, variables)


def t(text):
    return parse_term(text)


class TestRender:
    def test_round_trip(self):
        for text in ["foo", "foo(bar,baz)", "f(g(h(X)))", "[1,2,3]",
                     "[X|Rest]", "[]", "-4", "3.5", '"hello world"',
                     "f(X,X,Y)"]:
            assert render(t(text)) == text

    def test_arithmetic_is_infix(self):
        assert render(Struct("+", (Var("R"), num("1")))) == "(R+1)"
        assert render(Struct("-", (Struct("*", (Var("A"), num("2"))),
                                   num("3")))) == "((A*2)-3)"

    def test_decimal_trailing_zeros_dropped(self):
        assert render(num("2.50")) == "2.5"
        assert render(num("10")) == "10"


class TestMatch:
    def test_binds_pattern_variables_only(self):
        theta = match(t("f(X,b)"), t("f(a,b)"))
        assert theta == {"X": Atom("a")}

    def test_one_way(self):
        # a variable in the value position does not unify upward
        assert match(t("f(a)"), t("f(X)")) is None

    def test_repeated_variable_must_agree(self):
        assert match(t("f(X,X)"), t("f(a,a)")) is not None
        assert match(t("f(X,X)"), t("f(a,b)")) is None

    def test_list_tail(self):
        theta = match(t("[H|Rest]"), t("[1,2,3]"))
        assert theta["H"] == num("1")
        assert render(theta["Rest"]) == "[2,3]"


def enumerate_unifiers(t1, t2, universe):
    """Every grounding of both terms over a small universe that makes them
    equal; a reference oracle for unify."""
    vs = sorted(set(variables(t1)) | set(variables(t2)))
    out = []
    for combo in itertools.product(universe, repeat=len(vs)):
        theta = dict(zip(vs, combo))
        if substitute(t1, theta) == substitute(t2, theta):
            out.append(theta)
    return out


class TestUnify:
    PAIRS = [
        ("f(X,b)", "f(a,Y)"),
        ("f(X,X)", "f(Y,a)"),
        ("g(X,Y,X)", "g(Y,X,a)"),
        ("f(a)", "f(b)"),
        ("f(X,g(X))", "f(Y,Y)"),
        ("h(X,Y)", "h(Y,X)"),
    ]

    def test_agrees_with_ground_enumeration(self):
        universe = [Atom("a"), Atom("b")]
        for s1, s2 in self.PAIRS:
            t1, t2 = t(s1), t(s2)
            theta = unify(t1, t2)
            ground = enumerate_unifiers(t1, t2, universe)
            if theta is None:
                assert ground == [], (s1, s2)
            else:
                # every ground solution must factor through the mgu
                for g in ground:
                    assert match(substitute(t1, theta),
                                 substitute(t1, g)) is not None, (s1, s2, g)

    def test_unified_terms_equal(self):
        theta = unify(t("f(X,b)"), t("f(a,Y)"))
        assert substitute(t("f(X,b)"), theta) == substitute(t("f(a,Y)"), theta)

    def test_occurs_check(self):
        assert unify(t("X"), t("f(X)")) is None

    def test_idempotent(self):
        theta = unify(t("g(X,Y,X)"), t("g(Y,Z,a)"))
        for v, val in theta.items():
            assert substitute(val, theta) == val


atoms = st.sampled_from(["a", "b", "c"]).map(Atom)
vars_ = st.sampled_from(["X", "Y", "Z"]).map(Var)
nums = st.integers(min_value=0, max_value=3).map(lambda n: num(str(n)))


def structs(children):
    return st.builds(
        lambda f, args: Struct(f, tuple(args)),
        st.sampled_from(["f", "g"]),
        st.lists(children, min_size=1, max_size=3))


terms_st = st.recursive(atoms | vars_ | nums, structs, max_leaves=6)
ground_st = st.recursive(atoms | nums, structs, max_leaves=6)


class TestProperties:
    @given(pattern=terms_st, theta_vals=st.lists(ground_st, min_size=3,
                                                 max_size=3))
    @settings(max_examples=200, deadline=None)
    def test_match_recovers_grounding(self, pattern, theta_vals):
        grounding = dict(zip(["X", "Y", "Z"], theta_vals))
        value = substitute(pattern, grounding)
        assert is_ground(value)
        theta = match(pattern, value)
        assert theta is not None
        assert substitute(pattern, theta) == value

    @given(t1=terms_st, t2=terms_st)
    @settings(max_examples=200, deadline=None)
    def test_unify_makes_terms_equal(self, t1, t2):
        theta = unify(t1, t2)
        if theta is not None:
            assert substitute(t1, theta) == substitute(t2, theta)

    @given(value=ground_st)
    @settings(max_examples=100, deadline=None)
    def test_render_parse_round_trip(self, value):
        assert parse_term(render(value)) == value


class TestListSugar:
    def test_list_term_builds_cells(self):
        lst = list_term([Atom("a"), Atom("b")])
        assert render(lst) == "[a,b]"

    def test_empty(self):
        assert render(t("[]")) == "[]"
