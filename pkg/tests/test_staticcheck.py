import pytest

from conftest import CONTRACTS, CORPUS, load_corpus
from scpl.parser import parse_program, parse_term
from scpl.staticcheck import (brute_force_explicit_nd, check,
                              check_explicit_nd, desugar_rule,
                              insert_signatures)
from scpl.terms import Atom, Var, render


def checked(text):
    return check(parse_program("activation [a#start].\n" + text))


class TestCorpus:
    @pytest.mark.parametrize("name", CONTRACTS)
    def test_corpus_contract_is_clean(self, name):
        assert load_corpus(name).diagnostics == []

    def test_fixture_has_three_nd_violations(self):
        src = (CORPUS / "nd_fixture.scpl").read_text()
        diags = check(parse_program(src)).diagnostics
        nd = [v for v in diags if v.kind == "ExplicitND"]
        assert len(nd) == 3
        for v in nd:
            assert len(v.spans) == 2
            assert v.witness


class TestExplicitND:
    def test_same_input_different_posts(self):
        c = checked("start, X(go) --> left.\n"
                    "start, X(go) --> right.\n")
        assert any(v.kind == "ExplicitND" for v in c.diagnostics)

    def test_distinct_payloads_are_fine(self):
        c = checked("start, X(go(1)) --> left.\n"
                    "start, X(go(2)) --> right.\n")
        assert c.diagnostics == []

    def test_guards_can_separate(self):
        c = checked("start --> start(0).\n"
                    "start(B), X(go(N)) --> left where N > 0.\n"
                    "start(B), X(go(N)) --> right where N =< 0.\n")
        assert c.diagnostics == []

    def test_silent_vs_input_overlap(self):
        c = checked("start --> other.\n"
                    "start, X(go) --> third.\n")
        assert any(v.kind == "ExplicitND" for v in c.diagnostics)

    def test_own_output_not_confused_with_input(self):
        # an agent never receives its own broadcast, so the pay in/out
        # pair of the currency contracts must not be flagged
        c = checked("start --> start(0).\n"
                    "start(B), Other(pay(Self)) --> start(B')"
                    " where B' := B + 1.\n"
                    "start(B) --> pay(Other), start(B')"
                    " where B > 0 & B' := B - 1.\n")
        assert c.diagnostics == []


class TestBruteForceAgreement:
    UNIVERSE = [Atom("a"), Atom("b"), Atom("c")]

    @pytest.mark.parametrize("name", CONTRACTS)
    def test_corpus_agrees(self, name):
        c = load_corpus(name)
        pairs = brute_force_explicit_nd(c.program.rules, self.UNIVERSE)
        assert pairs == []

    def test_fixture_flags_same_pairs(self):
        src = (CORPUS / "nd_fixture.scpl").read_text()
        program = parse_program(src)
        symbolic = {tuple(sorted((v.spans[0].line, v.spans[1].line)))
                    for v in check(program).diagnostics
                    if v.kind == "ExplicitND"}
        brute = brute_force_explicit_nd(program.rules, self.UNIVERSE)
        brute_lines = {
            tuple(sorted((program.rules[i].origin.line,
                          program.rules[j].origin.line)))
            for i, j in brute}
        assert brute_lines == symbolic


class TestDesugar:
    def test_combined_splits_into_two(self):
        c = checked("start, X(go(N)) --> ack(N), done where N > 0.")
        kinds = sorted(r.kind for r in c.program.rules)
        assert kinds == ["input", "output"]
        inp = next(r for r in c.program.rules if r.kind == "input")
        out = next(r for r in c.program.rules if r.kind == "output")
        # the guard only mentions left-side variables, so it moves to the
        # input half and selects the rule
        assert inp.conditions and not out.conditions
        assert out.auto_continue
        assert inp.from_combined and out.from_combined

    def test_intermediate_state_carries_shared_vars(self):
        c = checked("start, X(go(N)) --> ack(N), done.")
        out = next(r for r in c.program.rules if r.kind == "output")
        assert "N" in render(out.pre)


class TestSignatures:
    def test_output_signer_defaults_to_self(self):
        c = checked("start --> ping, done.")
        r, = c.program.rules
        assert r.output.signer == Var("Self")

    def test_idempotent(self):
        from scpl.parser import RoleProgram

        c = checked("start --> ping, done.")
        role = RoleProgram("start", list(c.program.rules))
        again = insert_signatures(role)
        assert [render(r.output.payload) for r in again.rules] \
            == [render(r.output.payload) for r in c.program.rules]


class TestRoleValidation:
    def test_unknown_activation_role(self):
        c = check(parse_program("activation [a#ghost].\nstart --> start.\n"))
        assert any(v.kind == "UnknownRole" for v in c.diagnostics)

    def test_unbound_condition_variable(self):
        c = checked("start --> start(B') where B' := B + 1.")
        assert any(v.kind == "UnboundConditionVar" for v in c.diagnostics)
