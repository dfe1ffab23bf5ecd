"""Ledger-model checks: histories, diagonals, soundness, balances, the
finite SC-to-rules compiler, and implementation/morphism checkers.

Everything here works over immutable snapshots, either a live
Configuration or the event log of a finished run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional, Union

from .errors import NotAValidSC, ReplayDivergence
from .parser import Program, RoleProgram, Rule, Span, parse_term
from .runtime import Act, Configuration, TraceEvent, silent_fixpoint
from .staticcheck import SELF, CheckedProgram
from .terms import (ActPattern, Atom, Num, Struct, Term, Var, is_ground,
                    list_term, match, match_act, render, substitute)
from .conditions import eval_ground_conditions

History = list[Act]
Ledger = dict[str, History]


def _key(act: Act) -> tuple[str, str]:
    # seq is bookkeeping; identity is who said what
    return (act.signer, render(act.payload))


def restrict(h: History, u: str) -> History:
    return [act for act in h if act.signer == u]


def diagonal(ledger: Ledger) -> dict[str, History]:
    return {v: restrict(h, v) for v, h in ledger.items()}


def is_prefix(shorter: History, longer: History) -> bool:
    if len(shorter) > len(longer):
        return False
    return all(_key(a) == _key(b) for a, b in zip(shorter, longer))


@dataclass
class SoundnessViolation:
    u: str
    v: str
    position: int

    def __str__(self):
        return (f"history of {self.u!r} diverges from the acts of "
                f"{self.v!r} at position {self.position}")


def check_sound(ledger: Ledger) -> Optional[SoundnessViolation]:
    """A ledger is sound when every agent's view of every other agent is a
    contiguous window of that agent's own acts, aligned by act numbering
    (agents spawned mid-run join partway through a sender's history)."""
    diag = diagonal(ledger)
    for u, h in ledger.items():
        for v in ledger:
            own = {a.seq: a for a in diag.get(v, [])}
            prev = None
            for i, a in enumerate(restrict(h, v)):
                b = own.get(a.seq)
                if b is None or _key(a) != _key(b):
                    return SoundnessViolation(u, v, i)
                if prev is not None and a.seq != prev + 1:
                    return SoundnessViolation(u, v, i)
                prev = a.seq
    return None


def check_consistent(h1: History, h2: History) -> bool:
    """Two histories agree wherever they overlap: the same signer never
    shows two different acts at one position, and each view is gapless."""
    signers = {a.signer for a in h1} | {a.signer for a in h2}
    for v in signers:
        a = {m.seq: _key(m) for m in restrict(h1, v)}
        b = {m.seq: _key(m) for m in restrict(h2, v)}
        for s in set(a) & set(b):
            if a[s] != b[s]:
                return False
        for side in (a, b):
            seqs = sorted(side)
            if seqs and seqs != list(range(seqs[0], seqs[0] + len(seqs))):
                return False
    return True


# --- ledgers from traces ----------------------------------------------------

def _as_event(e) -> dict:
    if isinstance(e, TraceEvent):
        out = {"kind": e.kind, "agent": e.agent}
        out.update(e.data)
        return out
    return e


def ledger_from_events(events) -> Ledger:
    """Each agent's history: its own acts at emission time, other agents'
    acts at reception time."""
    ledger: Ledger = {}
    for raw in events:
        e = _as_event(raw)
        if e["kind"] == "act":
            act = Act(e["agent"], parse_term(e["payload"]), e["seq"])
            ledger.setdefault(e["agent"], []).append(act)
            for r in e.get("recipients", []):
                ledger.setdefault(r, [])
        elif e["kind"] == "recv":
            act = Act(e["sender"], parse_term(e["payload"]), e["seq"])
            ledger.setdefault(e["agent"], []).append(act)
    return ledger


def check_store_invariant(config: Configuration) -> Optional[str]:
    """The pending queues must hold exactly the acts each recipient has not
    yet received, in emission order, starting from its spawn baseline."""
    for name, cell in config.agents.items():
        if not cell.alive:
            continue
        for sender, sender_cell in config.agents.items():
            if sender == name:
                continue
            base = cell.baseline.get(sender, 0)
            got = cell.received.get(sender, 0)
            pending = list(cell.queues.get(sender, ()))
            expected = list(range(base + got + 1, sender_cell.sent + 1))
            actual = [act.seq for act in pending]
            if actual != expected:
                return (f"store mismatch for {name!r} from {sender!r}: "
                        f"pending seqs {actual}, expected {expected}")
            for act in pending:
                if act.signer != sender:
                    return (f"forged entry in {name!r}'s queue for "
                            f"{sender!r}: signed by {act.signer!r}")
    return None


# --- replay -----------------------------------------------------------------

def replay_state(checked: CheckedProgram, agent: str, initial_state: Term,
                 history: History) -> Term:
    """Fold an agent's history through the rules: own acts as output steps,
    others' acts as input steps. Reproduces the agent's final state."""
    rules = checked.program.rules
    state = silent_fixpoint(rules, agent, initial_state)
    skip_activated = False
    for act in history:
        if state == Atom("stop"):
            raise ReplayDivergence(
                f"{agent!r} has acts after reaching stop")
        if act.signer == agent:
            if skip_activated and isinstance(act.payload, Struct) \
                    and act.payload.functor == "activated":
                skip_activated = False
                continue
            state, spawned = _replay_output(rules, agent, state, act)
            skip_activated = spawned
        else:
            state = _replay_input(rules, agent, state, act)
        if state != Atom("stop"):
            state = silent_fixpoint(rules, agent, state)
    return state


def _replay_output(rules, agent: str, state: Term, act: Act):
    posts = []
    payload = act.payload
    activated = isinstance(payload, Struct) and payload.functor == "activated" \
        and len(payload.args) == 2
    for rule in rules:
        if rule.kind != "output":
            continue
        theta = match(rule.pre, state, {SELF: Atom(agent)})
        if theta is None:
            continue
        if rule.output is not None:
            theta = match(substitute(rule.output.payload, theta), payload, theta)
            if theta is None:
                continue
            for th in eval_ground_conditions(rule.conditions, theta):
                post = substitute(rule.post, th)
                if is_ground(post):
                    posts.append((post, rule.spawn is not None))
        elif activated and rule.spawn is not None:
            name_term, state_term = payload.args
            spawn_agent = substitute(rule.spawn.agent, theta)
            if isinstance(spawn_agent, Atom) and spawn_agent.name != "autonomous" \
                    and spawn_agent != name_term:
                continue
            if isinstance(spawn_agent, Var):
                theta = {**theta, spawn_agent.name: name_term}
            for th in eval_ground_conditions(rule.conditions, theta):
                if substitute(rule.spawn.state, th) != state_term:
                    continue
                post = substitute(rule.post, th)
                if is_ground(post):
                    posts.append((post, False))
    distinct = {render(p): (p, s) for p, s in posts}
    if not distinct:
        raise ReplayDivergence(
            f"no output rule of {agent!r} in state {render(state)} "
            f"produces {render(act.payload)}")
    if len(distinct) > 1:
        raise ReplayDivergence(
            f"ambiguous replay for {agent!r} on {render(act.payload)}: "
            f"{sorted(distinct)}")
    return next(iter(distinct.values()))


def _replay_input(rules, agent: str, state: Term, act: Act) -> Term:
    for rule in rules:
        if rule.kind != "input":
            continue
        theta = match(rule.pre, state, {SELF: Atom(agent)})
        if theta is None:
            continue
        theta = match_act(rule.input, act.signer, act.payload, theta)
        if theta is None:
            continue
        branches = eval_ground_conditions(rule.conditions, theta)
        if not branches:
            continue
        post = substitute(rule.post, branches[0])
        if is_ground(post):
            return post
    return state  # unmatched input: ignored


# --- balances ---------------------------------------------------------------

def balance_of(h: History, u: str, c, amounts: bool = False,
               count_ticks: bool = False) -> Decimal:
    """The §-style balance digest of a history: endowment plus payments
    received minus payments made. `amounts` switches from one-coin
    `pay(Recipient)` acts to `pay(Recipient,Amount)`; `count_ticks` also
    mints one coin per received clock tick."""
    total = Decimal(str(c))
    arity = 2 if amounts else 1
    for act in h:
        p = act.payload
        if isinstance(p, Struct) and p.functor == "pay" and len(p.args) == arity:
            amount = p.args[1].value if amounts else Decimal(1)
            if act.signer == u:
                total -= amount
            if p.args[0] == Atom(u):
                total += amount
        elif count_ticks and act.signer != u and p == Atom("tick"):
            total += 1
    return total


# --- finite transition systems ---------------------------------------------

@dataclass
class FiniteTS:
    states: set
    initial: object
    transitions: set  # of ordered pairs

    def __post_init__(self):
        assert self.initial in self.states
        assert all(a in self.states and b in self.states
                   for a, b in self.transitions)


@dataclass
class CounterExample:
    condition: str
    detail: str

    def __str__(self):
        return f"{self.condition}: {self.detail}"


def check_implementation(impl: FiniteTS, spec: FiniteTS,
                         f: dict) -> Optional[CounterExample]:
    """Both conditions of the implementation definition, by graph search."""
    if f.get(impl.initial) != spec.initial:
        return CounterExample("initial", "f(initial) is not the spec initial")
    succ: dict = {}
    for a, b in impl.transitions:
        succ.setdefault(a, set()).add(b)
    for s1, s2 in spec.transitions:
        starts = [x for x in impl.states if f.get(x) == s1]
        found = False
        for start in starts:
            frontier = list(succ.get(start, ()))
            seen = set(frontier)
            while frontier:
                x = frontier.pop()
                if f.get(x) == s2:
                    found = True
                    break
                for y in succ.get(x, ()):
                    if y not in seen:
                        seen.add(y)
                        frontier.append(y)
            if found:
                break
        if not found:
            return CounterExample(
                "spec-coverage", f"no path realizes {s1!r} -> {s2!r}")
    for a, b in impl.transitions:
        if f.get(a) != f.get(b) and (f.get(a), f.get(b)) not in spec.transitions:
            return CounterExample(
                "impl-respects-spec",
                f"transition {a!r} -> {b!r} maps to the non-transition "
                f"{f.get(a)!r} -> {f.get(b)!r}")
    return None


def check_strict_morphism(impl: FiniteTS, spec: FiniteTS,
                          f: dict) -> Optional[CounterExample]:
    """The f-image of the impl transition relation equals the spec relation
    exactly, modulo stuttering steps (impl transitions f maps to a single
    spec state, such as dropping an unreadable message)."""
    image = {(f.get(a), f.get(b)) for a, b in impl.transitions
             if f.get(a) != f.get(b)}
    extra = image - set(spec.transitions)
    if extra:
        s1, s2 = sorted(extra)[0]
        return CounterExample(
            "morphism", f"impl realizes the non-spec transition "
            f"{s1!r} -> {s2!r}")
    missing = set(spec.transitions) - image
    if missing:
        s1, s2 = sorted(missing)[0]
        return CounterExample(
            "strictness", f"spec transition {s1!r} -> {s2!r} is never "
            f"realized")
    if {f.get(s) for s in impl.states} != set(spec.states):
        return CounterExample(
            "strictness", "reachable state images differ from the spec set")
    return None


# --- abstract social contracts and the finite compiler ----------------------

SCAct = tuple[str, Term]  # (signer, payload)
SCHistory = tuple[SCAct, ...]
SCLedger = dict[str, SCHistory]


@dataclass(frozen=True)
class SCTransition:
    agent: str
    act: SCAct
    # ledgers as canonical tuples: ((agent, history), ...) sorted by agent
    pre: tuple
    post: tuple


def ledger_key(ledger: SCLedger) -> tuple:
    return tuple(sorted((v, tuple((s, render(p)) for s, p in h))
                        for v, h in ledger.items()))


@dataclass
class SC:
    """A finite, explicitly listed social contract transition system."""
    agents: list[str]
    transitions: list[tuple[SCLedger, str, SCAct, SCLedger]]

    def initial(self) -> SCLedger:
        return {v: () for v in self.agents}


def _history_restrict(h: SCHistory, u: str) -> SCHistory:
    return tuple(m for m in h if m[0] == u)


def _validate_sc(sc: SC):
    states = {ledger_key(sc.initial())}
    for pre, v, act, post in sc.transitions:
        states.add(ledger_key(pre))
        states.add(ledger_key(post))
    for pre, v, act, post in sc.transitions:
        expected = dict(pre)
        expected[v] = pre[v] + (act,)
        if ledger_key(post) != ledger_key(expected) or v not in pre:
            raise NotAValidSC(
                f"transition of {v!r} is not an append of one act")
        u = act[0]
        if u != v:
            # input transitions must be sound
            view = _history_restrict(post[v], u)
            own = _history_restrict(pre.get(u, ()), u)
            if not (len(view) <= len(own)
                    and all(a[0] == b[0] and render(a[1]) == render(b[1])
                            for a, b in zip(view, own))):
                raise NotAValidSC(
                    f"input transition of {v!r} reads an act {render(act[1])} "
                    f"that {u!r} has not taken")
    # output closure: an enabled output depends only on the agent's history
    outputs: dict[tuple, set] = {}
    by_state: dict[str, set] = {}
    all_pres = [pre for pre, _, _, _ in sc.transitions] + [sc.initial()]
    for pre, v, act, post in sc.transitions:
        if act[0] == v:
            outputs.setdefault((v, act[0], render(act[1])), set()).add(
                (v, pre[v]))
    for key, havers in outputs.items():
        v = key[0]
        histories = {pre[v] for pre in all_pres}
        for pre in all_pres:
            if (v, pre[v]) in havers:
                enabled = any(
                    ledger_key(p) == ledger_key(pre) and a == v
                    and (m[0], render(m[1])) == (key[1], key[2])
                    for p, a, m, _ in sc.transitions)
                if not enabled:
                    raise NotAValidSC(
                        f"output of {v!r} is not a function of its own "
                        f"history ({key[2]} missing at some ledger)")


def encode_history(agent: str, h: SCHistory) -> Term:
    acts = [Struct(s, (p,)) for s, p in h]
    return Struct(f"h_{agent}", (list_term(acts),))


def atod_compile(sc: SC) -> CheckedProgram:
    """Compile a finite social contract into a grounded rule program: each
    listed transition becomes one input or output rule over history-encoded
    states. The agent's state is its full history as a ground list."""
    _validate_sc(sc)
    rules: list[Rule] = []
    seen = set()
    for pre, v, act, post in sc.transitions:
        u, a = act
        pre_state = encode_history(v, pre[v])
        post_state = encode_history(v, post[v])
        if u == v:
            rule = Rule(pre=pre_state, input=None,
                        output=ActPattern(Var(SELF), a), spawn=None,
                        post=post_state, conditions=(), origin=Span(0, 0))
        else:
            rule = Rule(pre=pre_state,
                        input=ActPattern(Atom(u), a), output=None, spawn=None,
                        post=post_state, conditions=(), origin=Span(0, 0))
        key = repr(rule)
        if key not in seen:
            seen.add(key)
            rules.append(rule)
    roles = {}
    activation = []
    for v in sc.agents:
        role_rules = [r for r in rules
                      if isinstance(r.pre, Struct) and r.pre.functor == f"h_{v}"]
        roles[f"h_{v}"] = RoleProgram(f"h_{v}", role_rules)
        activation.append((v, encode_history(v, ())))
    program = Program(activation=activation, roles=roles, rules=rules,
                      source="<atod>")
    return CheckedProgram(program=program, diagnostics=[])


# --- exhaustive reachability ------------------------------------------------

def sc_reachable(sc: SC) -> FiniteTS:
    """BFS over the contract's explicit transitions from the empty ledger."""
    initial = ledger_key(sc.initial())
    by_pre: dict[tuple, list] = {}
    for pre, v, act, post in sc.transitions:
        by_pre.setdefault(ledger_key(pre), []).append(ledger_key(post))
    states = {initial}
    transitions = set()
    frontier = [initial]
    while frontier:
        s = frontier.pop()
        for t in by_pre.get(s, ()):
            transitions.add((s, t))
            if t not in states:
                states.add(t)
                frontier.append(t)
    return FiniteTS(states, initial, transitions)


def _config_key(states: dict[str, Term], store: dict) -> tuple:
    return (tuple(sorted((v, render(s)) for v, s in states.items())),
            tuple(sorted((r, s, tuple(render(p) for p in q))
                         for (r, s), q in store.items() if q)))


def ledger_part(key: tuple) -> tuple:
    return key[0]


def scds_reachable(checked: CheckedProgram, max_configs: int = 20000) -> FiniteTS:
    """Exhaustive interleaving of a ground compiled program: every enabled
    output branches, deliveries follow per-sender FIFO order."""
    rules = checked.program.rules
    agents = [v for v, _ in checked.program.activation]
    init_states = dict(checked.program.activation)
    init_store: dict = {}
    initial = _config_key(init_states, init_store)
    seen = {initial: (init_states, init_store)}
    transitions = set()
    frontier = [initial]
    while frontier:
        key = frontier.pop()
        states, store = seen[key]
        successors = []
        for v in agents:
            # output branches
            for rule in rules:
                if rule.kind != "output":
                    continue
                theta = match(rule.pre, states[v], {SELF: Atom(v)})
                if theta is None:
                    continue
                payload = substitute(rule.output.payload, theta)
                post = substitute(rule.post, theta)
                if not (is_ground(payload) and is_ground(post)):
                    continue
                new_states = dict(states)
                new_states[v] = post
                new_store = {k: list(q) for k, q in store.items()}
                for w in agents:
                    if w != v:
                        new_store.setdefault((w, v), []).append(payload)
                successors.append((new_states, new_store))
            # input branches: head of each sender queue
            for u in agents:
                queue = store.get((v, u), [])
                if not queue:
                    continue
                payload = queue[0]
                new_state = states[v]
                for rule in rules:
                    if rule.kind != "input":
                        continue
                    theta = match(rule.pre, states[v], {SELF: Atom(v)})
                    if theta is None:
                        continue
                    theta = match_act(rule.input, u, payload, theta)
                    if theta is None:
                        continue
                    post = substitute(rule.post, theta)
                    if is_ground(post):
                        new_state = post
                        break
                new_states = dict(states)
                new_states[v] = new_state
                new_store = {k: list(q) for k, q in store.items()}
                new_store[(v, u)] = new_store[(v, u)][1:]
                successors.append((new_states, new_store))
        for new_states, new_store in successors:
            new_key = _config_key(new_states, new_store)
            transitions.add((key, new_key))
            if new_key not in seen:
                if len(seen) >= max_configs:
                    raise NotAValidSC(
                        f"compiled program exceeds {max_configs} configurations")
                seen[new_key] = (new_states, new_store)
                frontier.append(new_key)
    return FiniteTS(set(seen), initial, transitions)


def encoded_ledger_key(sc: SC, ledger_key_value: tuple) -> tuple:
    """The SC ledger key rendered through the history encoding, for
    comparing SC states with compiled-program agent states."""
    out = []
    for v, h in ledger_key_value:
        hist = tuple((s, p) for s, p in h)
        term = Struct(f"h_{v}", (list_term(
            [Struct(s, (parse_term(p),)) for s, p in hist]),))
        out.append((v, render(term)))
    return tuple(sorted(out))


# --- offline trace verification ---------------------------------------------

@dataclass
class TraceReport:
    checks: dict = field(default_factory=dict)  # name -> (ok, detail)

    @property
    def ok(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks[name] = (ok, detail)


def verify_events(checked: CheckedProgram, events,
                  activation: Optional[list] = None) -> TraceReport:
    """Audit a recorded run offline: act numbering, per-sender FIFO,
    reception against the senders' actual acts, final-state replay, ledger
    soundness and pairwise consistency."""
    report = TraceReport()
    events = [_as_event(e) for e in events]
    acts_by_signer: dict[str, list] = {}
    received: dict[tuple, int] = {}
    baselines: dict[str, dict[str, int]] = {}
    finals: dict[str, dict] = {}
    problems = {"seq": [], "fifo": [], "sound": []}
    for e in events:
        if e["kind"] == "act":
            outs = acts_by_signer.setdefault(e["agent"], [])
            if e["seq"] != len(outs) + 1:
                problems["seq"].append(
                    f"{e['agent']} emitted seq {e['seq']}, expected {len(outs)+1}")
            outs.append(e)
            payload = parse_term(e["payload"])
            if isinstance(payload, Struct) and payload.functor == "activated":
                name = payload.args[0].name
                baselines[name] = {s: len(a) for s, a in acts_by_signer.items()}
                baselines[name][e["agent"]] = len(acts_by_signer[e["agent"]]) - 1
        elif e["kind"] == "recv":
            key = (e["agent"], e["sender"])
            base = baselines.get(e["agent"], {}).get(e["sender"], 0)
            pos = base + received.get(key, 0)
            sent = acts_by_signer.get(e["sender"], [])
            if pos >= len(sent):
                problems["sound"].append(
                    f"{e['agent']} received a {e['sender']}-act never emitted")
            else:
                expected = sent[pos]
                if expected["seq"] != e["seq"] or expected["payload"] != e["payload"]:
                    problems["fifo"].append(
                        f"{e['agent']} received {e['payload']} (seq {e['seq']}) "
                        f"from {e['sender']}, expected {expected['payload']} "
                        f"(seq {expected['seq']})")
            received[key] = received.get(key, 0) + 1
        elif e["kind"] == "final":
            finals[e["agent"]] = e
    report.add("act-numbering", not problems["seq"], "; ".join(problems["seq"]))
    report.add("per-sender-fifo", not problems["fifo"], "; ".join(problems["fifo"]))
    report.add("reception-soundness", not problems["sound"],
               "; ".join(problems["sound"]))

    count_issues = []
    for agent, e in finals.items():
        sent = len(acts_by_signer.get(agent, []))
        if e.get("sent") != sent:
            count_issues.append(
                f"{agent} reports {e.get('sent')} acts, log has {sent}")
        for sender, n in e.get("received", {}).items():
            if received.get((agent, sender), 0) != n:
                count_issues.append(
                    f"{agent} reports {n} receptions from {sender}, log has "
                    f"{received.get((agent, sender), 0)}")
    report.add("final-counts", not count_issues, "; ".join(count_issues))

    ledger = ledger_from_events(events)
    violation = check_sound(ledger)
    report.add("ledger-soundness", violation is None,
               str(violation) if violation else "")
    pair_ok = True
    names = sorted(ledger)
    for i, u in enumerate(names):
        for v in names[i + 1:]:
            if not check_consistent(ledger[u], ledger[v]):
                pair_ok = False
                report.add("pairwise-consistency", False, f"{u} vs {v}")
    if pair_ok:
        report.add("pairwise-consistency", True, "")

    if finals:
        init = dict(activation if activation is not None
                    else checked.program.activation)
        replay_issues = []
        for agent, e in finals.items():
            if agent in init:
                start = init[agent]
            else:
                start = _spawn_state(events, agent)
                if start is None:
                    replay_issues.append(f"no activation found for {agent}")
                    continue
            try:
                state = replay_state(checked, agent, start,
                                     ledger.get(agent, []))
            except ReplayDivergence as exc:
                replay_issues.append(str(exc))
                continue
            if render(state) != e["state"]:
                replay_issues.append(
                    f"{agent} replays to {render(state)}, run ended in "
                    f"{e['state']}")
        report.add("replay", not replay_issues, "; ".join(replay_issues))
    return report


def _spawn_state(events, agent: str) -> Optional[Term]:
    for e in events:
        if e["kind"] == "act":
            payload = parse_term(e["payload"])
            if isinstance(payload, Struct) and payload.functor == "activated" \
                    and payload.args[0] == Atom(agent):
                return payload.args[1]
    return None


# --- incremental run auditor ------------------------------------------------

class RunAuditor:
    """Streams a run's events and checks soundness, FIFO order, and the
    store invariant after every transition; cheap enough for long suites."""

    def __init__(self, checked: CheckedProgram, store_every: int = 1):
        self.checked = checked
        self.acts: dict[str, list[Act]] = {}
        self.received: dict[tuple, int] = {}
        self.baselines: dict[str, dict[str, int]] = {}
        self.errors: list[str] = []
        self.store_every = store_every
        self._events_seen = 0

    def __call__(self, event: TraceEvent, config: Configuration):
        e = _as_event(event)
        self._events_seen += 1
        if e["kind"] == "act":
            outs = self.acts.setdefault(e["agent"], [])
            if e["seq"] != len(outs) + 1:
                self.errors.append(
                    f"seq gap for {e['agent']}: {e['seq']} after {len(outs)}")
            outs.append(Act(e["agent"], parse_term(e["payload"]), e["seq"]))
            payload = outs[-1].payload
            if isinstance(payload, Struct) and payload.functor == "activated":
                name = payload.args[0].name
                self.baselines[name] = {s: len(a) for s, a in self.acts.items()}
                self.baselines[name][e["agent"]] = len(outs) - 1
        elif e["kind"] == "recv":
            key = (e["agent"], e["sender"])
            base = self.baselines.get(e["agent"], {}).get(e["sender"], 0)
            pos = base + self.received.get(key, 0)
            sent = self.acts.get(e["sender"], [])
            if pos >= len(sent):
                self.errors.append(
                    f"{e['agent']} received an unsent {e['sender']}-act")
            elif sent[pos].seq != e["seq"] \
                    or render(sent[pos].payload) != e["payload"]:
                self.errors.append(
                    f"FIFO break: {e['agent']} got {e['payload']} from "
                    f"{e['sender']} at position {pos}")
            self.received[key] = self.received.get(key, 0) + 1
        if e["kind"] in ("act", "recv") \
                and self._events_seen % self.store_every == 0:
            problem = check_store_invariant(config)
            if problem:
                self.errors.append(problem)
