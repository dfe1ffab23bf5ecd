import pytest

from scpl.errors import DuplicateAgent, ScplSyntaxError
from scpl.parser import (Assign, AssignChoice, Compare, ListOp, parse_program,
                         parse_term)
from scpl.terms import Atom, Var, render


def rules_of(text):
    return parse_program("activation [a#start].\n" + text).rules


class TestRuleKinds:
    def test_silent(self):
        r, = rules_of("start --> done.")
        assert r.kind == "silent"
        assert r.input is None and r.output is None

    def test_output(self):
        r, = rules_of("start --> ping, done.")
        assert r.kind == "output"
        assert render(r.output.payload) == "ping"

    def test_input(self):
        r, = rules_of("start, other(ping) --> done.")
        assert r.kind == "input"
        assert r.input.signer == Atom("other")
        assert render(r.input.payload) == "ping"

    def test_combined(self):
        r, = rules_of("start, other(ping) --> pong, done.")
        assert r.kind == "combined"

    def test_arrow_synonym(self):
        a, = rules_of("start --> done.")
        b, = rules_of("start :- done.")
        assert a.pre == b.pre and a.post == b.post


class TestInputPatterns:
    def test_unary_term_is_signer_and_payload(self):
        r, = rules_of("start, bob(hello(X)) --> done.")
        assert r.input.signer == Atom("bob")
        assert render(r.input.payload) == "hello(X)"

    def test_variable_signer(self):
        r, = rules_of("start, Who(hello) --> done.")
        assert r.input.signer == Var("Who")

    def test_wildcard_signer(self):
        r, = rules_of("start, _(hello(X)) --> done.")
        assert r.input.signer is None
        assert render(r.input.payload) == "hello(X)"

    def test_nonunary_term_is_bare_payload(self):
        r, = rules_of("start, ballot(X,[],R) --> done.")
        assert r.input.signer is None
        assert render(r.input.payload) == "ballot(X,[],R)"


class TestSpawn:
    def test_spawn_with_output(self):
        r, = rules_of("start, other(go) --> Name#member, done.")
        assert r.spawn is not None
        assert r.spawn.agent == Var("Name")
        assert render(r.spawn.state) == "member"

    def test_autonomous_spawn(self):
        r, = rules_of("start --> autonomous#secretary([Self]), done.")
        assert r.spawn.agent == Atom("autonomous")


class TestConditions:
    def test_assign(self):
        r, = rules_of("start(B) --> start(B') where B' := B + 1.")
        c, = r.conditions
        assert isinstance(c, Assign)
        assert c.var == "B'"

    def test_assign_choice(self):
        r, = rules_of("start(R) --> start(R') where R' := R, R+1, or R-1.")
        c, = r.conditions
        assert isinstance(c, AssignChoice)
        assert len(c.options) == 3

    def test_compare_chain(self):
        r, = rules_of("start(B) --> done where B > 0 & B =< 9.")
        ops = [c.op for c in r.conditions]
        assert ops == [">", "=<"]

    def test_list_op(self):
        r, = rules_of(
            "start(L) --> start(L') where remove_elem(X, L, L').")
        c, = r.conditions
        assert isinstance(c, ListOp)
        assert c.op == "remove_elem"


class TestActivation:
    def test_parsed_pairs(self):
        p = parse_program("activation [a#one,b#two(3)].\none --> one.")
        assert [(n, render(s)) for n, s in p.activation] \
            == [("a", "one"), ("b", "two(3)")]

    def test_duplicate_agent_rejected(self):
        with pytest.raises(DuplicateAgent):
            parse_program("activation [a#one,a#two].\none --> one.")

    def test_autonomous_reserved(self):
        with pytest.raises(ScplSyntaxError):
            parse_program("activation [autonomous#one].\none --> one.")


class TestSyntaxErrors:
    def test_position_reported(self):
        try:
            parse_program("activation [a#start].\nstart --> .\n")
        except ScplSyntaxError as e:
            assert e.line == 2
        else:
            pytest.fail("expected a syntax error")

    def test_missing_period(self):
        with pytest.raises(ScplSyntaxError):
            parse_program("activation [a#start]\nstart --> start.")

    def test_comments_ignored(self):
        p = parse_program(
            "% header\nactivation [a#start]. % trailing\nstart --> start.\n")
        assert len(p.rules) == 1


class TestRoles:
    def test_role_grouping(self):
        p = parse_program(
            "activation [a#ping].\n"
            "ping --> hello, pong.\n"
            "pong, _(hello) --> ping.\n")
        assert set(p.roles) >= {"ping"}

    def test_source_name_recorded(self):
        p = parse_program("activation [a#x].\nx --> x.", source="demo.scpl")
        assert p.source == "demo.scpl"
