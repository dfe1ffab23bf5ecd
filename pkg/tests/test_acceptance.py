"""End-to-end acceptance checks. Each test prints one PASS line; a failure
in any criterion fails the corresponding test."""

import json
import random
import time
from collections import defaultdict
from decimal import Decimal

import pytest

import conftest
from conftest import CONTRACTS, CORPUS, corpus_path, load_corpus
from scpl import verifier
from scpl.oracle import load_script, random_oracle
from scpl.parser import parse_program, parse_term
from scpl.runtime import (Configuration, OracleDecision, canonical_scheduler,
                          random_scheduler, run)
from scpl.staticcheck import brute_force_explicit_nd, check
from scpl.terms import Atom, Num, Struct, render

SEEDS = range(100)


def announce(name):
    line = f"ACCEPTANCE {name}: PASS"
    print(f"\n{line}")
    conftest.ACCEPTANCE_LINES.append(line)


class TestGoldenTrace:
    def test_golden_trace(self):
        t0 = time.time()
        provider, order = load_script(CORPUS / "golden_script.json")
        checked = load_corpus("tourists_hosts")
        config = Configuration.activate(checked, provider)
        trace = run(config, canonical_scheduler(order))
        golden = (CORPUS / "golden_trace.txt").read_text()
        assert trace.text() == golden
        assert time.time() - t0 < 1.0
        announce("golden-trace")


class TestStaticChecker:
    def test_static_checker(self):
        t0 = time.time()
        fixture = check(parse_program((CORPUS / "nd_fixture.scpl").read_text()))
        nd = [v for v in fixture.diagnostics if v.kind == "ExplicitND"]
        assert len(nd) == 3
        assert all(v.witness for v in nd)
        universe = [Atom("a"), Atom("b"), Atom("c")]
        for name in CONTRACTS:
            checked = load_corpus(name)
            assert checked.diagnostics == [], name
            assert brute_force_explicit_nd(checked.program.rules,
                                           universe) == [], name
        assert time.time() - t0 < 10.0
        announce("static-checker")


@pytest.fixture(scope="session")
def soundness_suite():
    """100 seeds x 6 contracts x 500 steps, audited incrementally."""
    t0 = time.time()
    results = {"store_errors": [], "replay_errors": [], "sound_errors": [],
               "runs": []}
    for name in CONTRACTS:
        checked = load_corpus(name)
        init = dict(checked.program.activation)
        # payments must stay within the community for coin conservation
        extra = [] if name == "currency_endowment" else None
        for seed in SEEDS:
            auditor = verifier.RunAuditor(checked)
            config = Configuration.activate(
                checked, random_oracle(seed, extra_values=extra),
                on_event=auditor)
            trace = run(config, random_scheduler(seed, fairness=50),
                        max_steps=500)
            results["store_errors"].extend(
                (name, seed, e) for e in auditor.errors)
            ledger = verifier.ledger_from_events(trace.events)
            violation = verifier.check_sound(ledger)
            if violation is not None:
                results["sound_errors"].append((name, seed, str(violation)))
            names = sorted(ledger)
            for i, u in enumerate(names):
                for v in names[i + 1:]:
                    if not verifier.check_consistent(ledger[u], ledger[v]):
                        results["sound_errors"].append(
                            (name, seed, f"inconsistent {u} vs {v}"))
            events = [verifier._as_event(e) for e in trace.events]
            for agent, cell in config.agents.items():
                start = init.get(agent)
                if start is None:
                    start = verifier._spawn_state(events, agent)
                try:
                    state = verifier.replay_state(
                        checked, agent, start, ledger.get(agent, []))
                except Exception as exc:
                    results["replay_errors"].append((name, seed, agent,
                                                     str(exc)))
                    continue
                if render(state) != render(cell.state):
                    results["replay_errors"].append(
                        (name, seed, agent,
                         f"{render(state)} != {render(cell.state)}"))
            results["runs"].append((name, seed, trace, config))
    results["elapsed"] = time.time() - t0
    return results


class TestSoundnessSuite:
    def test_soundness_and_consistency(self, soundness_suite):
        assert soundness_suite["sound_errors"] == []
        assert len(soundness_suite["runs"]) == 600
        assert soundness_suite["elapsed"] < 60.0
        announce("soundness-suite")

    def test_store_invariant(self, soundness_suite):
        assert soundness_suite["store_errors"] == []
        announce("store-invariant")

    def test_replay_determinism(self, soundness_suite):
        assert soundness_suite["replay_errors"] == []
        announce("replay-determinism")


def fold_balances(trace, endowments, amounts, count_ticks):
    """Per-agent balance after each step of that agent's history, plus the
    omniscient global balance sequence for conservation checks."""
    from scpl.runtime import Act

    histories = {a: [] for a in endowments}
    per_agent = {a: [endowments[a]] for a in endowments}
    global_hist = []
    global_sums = []
    for e in trace.events:
        ev = verifier._as_event(e)
        if ev["kind"] == "act" and ev["agent"] in endowments:
            global_hist.append(Act(ev["agent"], parse_term(ev["payload"]),
                                   ev["seq"]))
            global_sums.append(sum(
                verifier.balance_of(global_hist, a, endowments[a],
                                    amounts=amounts, count_ticks=count_ticks)
                for a in endowments))
        if ev["kind"] not in ("act", "recv") or ev["agent"] not in endowments:
            continue
        signer = ev["agent"] if ev["kind"] == "act" else ev["sender"]
        histories[ev["agent"]].append(
            Act(signer, parse_term(ev["payload"]), ev["seq"]))
        per_agent[ev["agent"]].append(verifier.balance_of(
            histories[ev["agent"]], ev["agent"], endowments[ev["agent"]],
            amounts=amounts, count_ticks=count_ticks))
    return per_agent, global_sums, histories


class TestCurrencyProperties:
    def test_endowment_contract(self, soundness_suite):
        checked = load_corpus("currency_endowment")
        agents = [n for n, _ in checked.program.activation]
        endow = {a: Decimal(10) for a in agents}
        for name, seed, trace, config in soundness_suite["runs"]:
            if name != "currency_endowment":
                continue
            per_agent, global_sums, _ = fold_balances(
                trace, endow, amounts=False, count_ticks=False)
            for agent, series in per_agent.items():
                assert all(v >= 0 for v in series), (seed, agent)
            assert all(s == Decimal(30) for s in global_sums), seed
            for agent in agents:
                state = config.agents[agent].state
                assert isinstance(state, Struct) and len(state.args) == 1
        announce("currency-endowment")

    def test_egalitarian_contract(self, soundness_suite):
        checked = load_corpus("currency_egalitarian")
        agents = [n for n, _ in checked.program.activation
                  if n != "clock"]
        endow = {a: Decimal(0) for a in agents}
        checked_runs = 0
        for name, seed, trace, config in soundness_suite["runs"]:
            if name != "currency_egalitarian":
                continue
            checked_runs += 1
            _, _, histories = fold_balances(
                trace, endow, amounts=True, count_ticks=True)
            for agent in agents:
                # the running balance digest must equal the state's number
                digest = verifier.balance_of(histories[agent], agent, 0,
                                             amounts=True, count_ticks=True)
                state = config.agents[agent].state
                assert isinstance(state, Struct)
                assert state.args[0] == Num(digest), (seed, agent)
                prefix_vals = [verifier.balance_of(histories[agent][:k],
                                                   agent, 0, amounts=True,
                                                   count_ticks=True)
                               for k in range(len(histories[agent]) + 1)]
                assert all(v >= 0 for v in prefix_vals), (seed, agent)
        assert checked_runs == 100
        announce("currency-egalitarian")


class TestAtoD:
    def test_atod_morphism(self):
        from test_verifier import broadcast_sc, currency_sc, hello_sc, roundtrip

        t0 = time.time()
        for factory in (hello_sc, broadcast_sc, currency_sc):
            sc = factory()
            assert len(sc.agents) <= 4 and len(sc.transitions) <= 50
            spec, impl, f = roundtrip(sc)
            assert {f[c] for c in impl.states} == spec.states
            assert verifier.check_implementation(impl, spec, f) is None
            assert verifier.check_strict_morphism(impl, spec, f) is None
        assert time.time() - t0 < 30.0
        announce("atod-morphism")


class DemocraticProvider:
    """Scripts dana's proposals and casts seeded random ballots; records
    every R-adjustment so the tally can be recomputed independently."""

    def __init__(self, seed, proposals):
        self.rng = random.Random(seed)
        self.proposals = list(proposals)
        self.next_proposal = 0
        self.adjustments = defaultdict(list)

    def __call__(self, request):
        alts = request.alternatives
        payloads = [a.payload_pattern() for a in alts]
        if all(p is not None and isinstance(p, Struct)
               and p.functor == "ballot" for p in payloads) and payloads:
            # a vote: the three branches are R-1, R, R+1 in some order
            values = sorted(p.args[2].value for p in payloads)
            middle = values[1]
            index = self.rng.randrange(len(alts))
            chosen = payloads[index].args[2].value
            proposal = render(payloads[index].args[0])
            self.adjustments[proposal].append(chosen - middle)
            return OracleDecision("choose", index, {})
        if request.agent == "dana" and self.next_proposal < len(self.proposals):
            for i, p in enumerate(payloads):
                if p is not None and isinstance(p, Struct) \
                        and p.functor == "propose":
                    term = self.proposals[self.next_proposal]
                    self.next_proposal += 1
                    return OracleDecision("choose", i, {"X": term})
        return OracleDecision("pass")


class TestDemocraticGroup:
    def test_tally_sign_decides(self):
        checked = load_corpus("democratic_group")
        mismatches = []
        for seed in range(50):
            rng = random.Random(1000 + seed)
            proposals = [parse_term("add(m1)")]
            proposals.append(parse_term(
                rng.choice(["add(m2)", "remove(dana)"])))
            provider = DemocraticProvider(seed, proposals)
            config = Configuration.activate(checked, provider)
            trace = run(config, random_scheduler(seed, fairness=50),
                        max_steps=500)
            acts = [verifier._as_event(e)["payload"]
                    for e in trace.events if e.kind == "act"]
            for proposal in proposals:
                key = render(proposal)
                tally = sum(provider.adjustments.get(key, []))
                if proposal.functor == "add":
                    target = render(proposal.args[0])
                    applied = any(
                        p.startswith(f"activated({target},") for p in acts)
                else:
                    target = render(proposal.args[0])
                    applied = f"please_leave({target})" in acts
                if applied != (tally > 0):
                    mismatches.append((seed, key, tally, applied))
        assert mismatches == []
        announce("democratic-group")


class TestTraceRoundTrip:
    def test_verify_round_trip_and_corruption(self, soundness_suite):
        # verify a sample of emitted traces from every contract
        by_contract = defaultdict(list)
        for name, seed, trace, config in soundness_suite["runs"]:
            by_contract[name].append(trace)
        sample_lines = None
        for name, traces in by_contract.items():
            checked = load_corpus(name)
            for trace in traces[:10]:
                events = [json.loads(l) for l in trace.jsonl().splitlines()]
                report = verifier.verify_events(checked, events)
                assert report.ok, (name, report.checks)
                acts = [e for e in events if e["kind"] == "act"]
                if sample_lines is None and len(acts) > 4:
                    sample_lines = (name, events)
        name, events = sample_lines
        checked = load_corpus(name)
        act_positions = [i for i, e in enumerate(events)
                         if e["kind"] == "act"]
        # single line deletion
        dropped = [e for i, e in enumerate(events)
                   if i != act_positions[len(act_positions) // 2]]
        assert not verifier.verify_events(checked, dropped).ok
        # same-sender swap
        by_signer = defaultdict(list)
        for i in act_positions:
            by_signer[events[i]["agent"]].append(i)
        i, j = next(v[:2] for v in by_signer.values() if len(v) >= 2)
        swapped = list(events)
        swapped[i], swapped[j] = swapped[j], swapped[i]
        assert not verifier.verify_events(checked, swapped).ok
        announce("trace-round-trip")


class TestInteractiveEndToEnd:
    def test_two_sessions_complete_a_reservation(self):
        from test_gateway import drive_reservation, make_client

        checked, client = make_client()
        trace_text = drive_reservation(client)
        events = [json.loads(l) for l in trace_text.splitlines()]
        payloads = [e.get("payload", "") for e in events
                    if e["kind"] == "act"]
        for expected in ("reserve(nimrod)", "reservation_confirmed(gal)",
                         "checkout(nimrod)"):
            assert expected in payloads
        report = verifier.verify_events(checked, events)
        assert report.ok, report.checks
        announce("interactive-end-to-end")
