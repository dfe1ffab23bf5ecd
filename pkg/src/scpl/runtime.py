"""Simulation runtime: agents, addressed message store, schedulers, traces.

Each agent is a state transducer. Acts are broadcast to every other live
agent and queued per sender in FIFO order; cross-sender interleaving is the
scheduler's choice. Output steps that leave a genuine choice open (several
alternatives, unbound output variables, or a value choice in the
conditions) consult an oracle.
"""

from __future__ import annotations

import copy
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .conditions import (apply_list_op, eval_compare, eval_expr,
                         eval_ground_conditions)
from .errors import (ArithmeticOnNonNumber, ConditionFailed, NotEnabled,
                     SilentLoop, SpawnCollision, StructureError)
from .parser import (Assign, AssignChoice, Compare, Condition, ListOp,
                     Program, Rule)
from .staticcheck import SELF, CheckedProgram
from .terms import (Atom, Struct, Substitution, Term, is_ground, match,
                    match_act, render, substitute, variables)

STOP = Atom("stop")
SILENT_CAP = 1000


@dataclass(frozen=True)
class Act:
    signer: str
    payload: Term
    seq: int  # 1-based, per signer


@dataclass
class Alternative:
    """One way an agent may take an output step, possibly not yet ground."""
    rule: Rule
    theta: Substitution
    unbound: list[str]  # variables the oracle must ground
    residual: tuple[Condition, ...]  # conditions awaiting those variables

    def payload_pattern(self) -> Optional[Term]:
        if self.rule.output is None:
            return None
        return substitute(self.rule.output.payload, self.theta)

    def spawn_pattern(self) -> Optional[tuple[Term, Term]]:
        if self.rule.spawn is None:
            return None
        return (substitute(self.rule.spawn.agent, self.theta),
                substitute(self.rule.spawn.state, self.theta))

    def has_choice(self) -> bool:
        return any(isinstance(c, AssignChoice) for c in self.residual)

    def describe(self) -> Term:
        p = self.payload_pattern()
        if p is not None:
            return p
        agent, state = self.spawn_pattern()
        return Struct("spawn", (agent, state))


@dataclass(frozen=True)
class GroundStep:
    payload: Optional[Term]
    spawn: Optional[tuple[str, Term]]  # (agent name, initial state)
    post: Term

    def describe(self) -> Term:
        if self.payload is not None:
            return self.payload
        return Struct("spawn", (Atom(self.spawn[0]), self.spawn[1]))


def partial_eval(conditions, theta: Substitution) -> list[tuple[Substitution, tuple]]:
    """Evaluate conditions as far as the bindings allow.

    Returns (extended bindings, residual conditions) branches; ground value
    choices branch, unevaluable conditions go to the residual, false ground
    comparisons kill the branch.
    """
    branches: list[tuple[Substitution, list]] = [(dict(theta), [])]
    for cond in conditions:
        new_branches = []
        for th, residual in branches:
            blocked = any(v not in th for v in _condition_inputs(cond))
            if blocked:
                new_branches.append((th, residual + [cond]))
                continue
            if isinstance(cond, Assign):
                value = eval_expr(cond.expr, th)
                prior = th.get(cond.var)
                if prior is not None and prior != value:
                    continue
                new_branches.append(({**th, cond.var: value}, list(residual)))
            elif isinstance(cond, AssignChoice):
                prior = th.get(cond.var)
                for opt in cond.options:
                    value = eval_expr(opt, th)
                    if prior is not None and prior != value:
                        continue
                    new_branches.append(({**th, cond.var: value}, list(residual)))
            elif isinstance(cond, Compare):
                if eval_compare(cond.op, eval_expr(cond.lhs, th),
                                eval_expr(cond.rhs, th)):
                    new_branches.append((th, list(residual)))
            else:
                result = apply_list_op(cond.op, substitute(cond.elem, th),
                                       substitute(cond.lst, th))
                if result is None:
                    continue
                prior = th.get(cond.result)
                if prior is not None and prior != result:
                    continue
                new_branches.append(({**th, cond.result: result}, list(residual)))
        branches = new_branches
        if not branches:
            break
    return [(th, tuple(residual)) for th, residual in branches]


def silent_fixpoint(rules, name: str, state: Term) -> Term:
    """Apply silent rules until none applies (or the agent reaches stop)."""
    for _ in range(SILENT_CAP):
        fired = False
        for rule in rules:
            if rule.kind != "silent":
                continue
            theta = match(rule.pre, state, {SELF: Atom(name)})
            if theta is None:
                continue
            branches = eval_ground_conditions(rule.conditions, theta)
            if not branches:
                continue
            post = substitute(rule.post, branches[0])
            if not is_ground(post):
                continue
            state = post
            fired = True
            break
        if not fired or state == STOP:
            return state
    raise SilentLoop(f"agent {name!r} exceeded {SILENT_CAP} silent steps")


def _condition_inputs(cond) -> list[str]:
    if isinstance(cond, Assign):
        return variables(cond.expr)
    if isinstance(cond, AssignChoice):
        out = []
        for opt in cond.options:
            out.extend(v for v in variables(opt) if v not in out)
        return out
    if isinstance(cond, Compare):
        return variables(cond.lhs) + variables(cond.rhs)
    return variables(cond.elem) + variables(cond.lst)


def ground_alternative(alt: Alternative, bindings: Substitution) -> list[GroundStep]:
    """All fully ground steps the alternative admits under extra bindings."""
    theta = dict(alt.theta)
    theta.update(bindings)
    try:
        branches = eval_ground_conditions(alt.residual, theta)
    except ArithmeticOnNonNumber:
        return []
    steps = []
    seen = set()
    for th in branches:
        parts = [substitute(alt.rule.post, th)]
        payload = None
        if alt.rule.output is not None:
            payload = substitute(alt.rule.output.payload, th)
            parts.append(payload)
        spawn = None
        if alt.rule.spawn is not None:
            agent = substitute(alt.rule.spawn.agent, th)
            state = substitute(alt.rule.spawn.state, th)
            parts.extend([agent, state])
            if not isinstance(agent, Atom):
                continue
            spawn = (agent.name, state)
        if not all(is_ground(p) for p in parts):
            continue
        step = GroundStep(payload=payload, spawn=spawn, post=parts[0])
        key = render(step.describe()), render(step.post)
        if key not in seen:
            seen.add(key)
            steps.append(step)
    return steps


# --- trace ------------------------------------------------------------------

@dataclass
class TraceEvent:
    kind: str  # act | oracle | recv | final
    agent: str
    data: dict

    def to_json(self, index: Optional[int] = None) -> str:
        out = {"kind": self.kind, "agent": self.agent}
        if index is not None:
            out["index"] = index
        out.update(self.data)
        return json.dumps(out)


def _is_visible(e: TraceEvent) -> bool:
    return e.kind == "act" or (e.kind == "oracle"
                               and e.data.get("decision") != "pass")


@dataclass
class Trace:
    events: list[TraceEvent] = field(default_factory=list)

    def visible(self) -> list[TraceEvent]:
        return [e for e in self.events if _is_visible(e)]

    def text(self) -> str:
        lines = []
        for i, e in enumerate(self.visible(), start=1):
            payload = e.data["payload"]
            if e.kind == "oracle":
                payload = f"oracle({payload})"
            lines.append(f"H / {i} = {e.agent}({payload})")
        return "\n".join(lines) + ("\n" if lines else "")

    def jsonl(self) -> str:
        lines = []
        index = 0
        for e in self.events:
            if _is_visible(e):
                index += 1
                lines.append(e.to_json(index))
            else:
                lines.append(e.to_json())
        return "".join(line + "\n" for line in lines)


# --- configuration ----------------------------------------------------------

@dataclass
class AgentCell:
    name: str
    state: Term
    queues: dict[str, deque] = field(default_factory=dict)
    received: dict[str, int] = field(default_factory=dict)
    baseline: dict[str, int] = field(default_factory=dict)
    sent: int = 0
    alive: bool = True
    # cached oracle outcome for the current state: (state render, GroundStep | "pass")
    decision: Optional[tuple[str, object]] = None

    def cached_for(self, key: str):
        if self.decision is not None and self.decision[0] == key:
            return self.decision[1]
        return None


@dataclass
class OracleRequest:
    request_id: int
    agent: str
    state: Term
    alternatives: list[Alternative]
    domain: list[Term]  # names of the other live agents
    fresh_names: list[str]  # unused names, for grounding spawn positions


@dataclass
class OracleDecision:
    kind: str  # choose | pass
    index: int = -1
    bindings: Substitution = field(default_factory=dict)


OracleProvider = Callable[[OracleRequest], OracleDecision]


class Configuration:
    def __init__(self, checked: CheckedProgram, oracle: OracleProvider,
                 on_event: Optional[Callable[[TraceEvent, "Configuration"], None]] = None):
        self.program: Program = checked.program
        self.rules: list[Rule] = checked.program.rules
        self.oracle = oracle
        self.agents: dict[str, AgentCell] = {}
        self.autonomous: set[str] = set()
        self.trace = Trace()
        self.on_event = on_event
        self._auto_counter = 0
        self._request_counter = 0
        self._finalized = False

    @classmethod
    def activate(cls, checked: CheckedProgram, oracle: OracleProvider,
                 activation: Optional[list[tuple[str, Term]]] = None,
                 on_event=None) -> "Configuration":
        config = cls(checked, oracle, on_event)
        pairs = activation if activation is not None else checked.program.activation
        for name, state in pairs:
            if name in config.agents:
                raise SpawnCollision(f"agent {name!r} activated twice")
            config.agents[name] = AgentCell(name=name, state=state)
        for name in list(config.agents):
            config._silent_close(name)
        return config

    def clone(self) -> "Configuration":
        other = Configuration.__new__(Configuration)
        other.program = self.program
        other.rules = self.rules
        other.oracle = self.oracle
        other.on_event = None
        other.agents = copy.deepcopy(self.agents)
        other.autonomous = set(self.autonomous)
        other.trace = copy.deepcopy(self.trace)
        other._auto_counter = self._auto_counter
        other._request_counter = self._request_counter
        other._finalized = self._finalized
        return other

    def _record(self, event: TraceEvent):
        self.trace.events.append(event)
        if self.on_event is not None:
            self.on_event(event, self)

    # --- silent rules ---

    def _silent_close(self, name: str):
        cell = self.agents[name]
        new_state = silent_fixpoint(self.rules, name, cell.state)
        if new_state != cell.state:
            cell.state = new_state
            cell.decision = None
        if cell.state == STOP:
            self._halt_agent(name)

    def _halt_agent(self, name: str):
        cell = self.agents[name]
        cell.alive = False
        cell.queues.clear()

    # --- message store ---

    def _broadcast(self, signer: str, payload: Term) -> Act:
        cell = self.agents[signer]
        cell.sent += 1
        act = Act(signer, payload, cell.sent)
        recipients = []
        for name, other in self.agents.items():
            if name == signer or not other.alive:
                continue
            other.queues.setdefault(signer, deque()).append(act)
            recipients.append(name)
        self._record(TraceEvent("act", signer, {
            "payload": render(payload), "seq": act.seq,
            "recipients": sorted(recipients)}))
        return act

    def deliverable_pairs(self) -> list[tuple[str, str]]:
        """(recipient, sender) pairs with a pending act, excluding agents
        that must first complete a continuation."""
        out = []
        for name in sorted(self.agents):
            cell = self.agents[name]
            if not cell.alive or self.has_continuation(name):
                continue
            for sender in sorted(cell.queues):
                if cell.queues[sender]:
                    out.append((name, sender))
        return out

    def has_continuation(self, name: str) -> bool:
        cell = self.agents[name]
        if not cell.alive:
            return False
        return any(r.auto_continue
                   and match(r.pre, cell.state, {SELF: Atom(name)}) is not None
                   for r in self.rules)

    # --- input steps ---

    def step_input(self, recipient: str, sender: str):
        cell = self.agents[recipient]
        if not cell.alive:
            raise NotEnabled(f"agent {recipient!r} has stopped")
        if self.has_continuation(recipient):
            raise NotEnabled(f"agent {recipient!r} must complete a continuation first")
        queue = cell.queues.get(sender)
        if not queue:
            raise NotEnabled(f"no pending act from {sender!r} to {recipient!r}")
        act: Act = queue.popleft()
        cell.received[sender] = cell.received.get(sender, 0) + 1

        matched = False
        for rule in self.rules:
            if rule.kind != "input":
                continue
            theta = match(rule.pre, cell.state, {SELF: Atom(recipient)})
            if theta is None:
                continue
            theta = match_act(rule.input, act.signer, act.payload, theta)
            if theta is None:
                continue
            branches = eval_ground_conditions(rule.conditions, theta)
            if not branches:
                if rule.from_combined:
                    # desugared guards take part in rule selection
                    continue
                raise ConditionFailed(
                    f"conditions of the input rule at {rule.origin} failed for "
                    f"{recipient!r} on {render(act.payload)} from {sender!r}")
            post = substitute(rule.post, branches[0])
            if not is_ground(post):
                raise ConditionFailed(
                    f"input rule at {rule.origin} leaves a non-ground state "
                    f"{render(post)}")
            cell.state = post
            cell.decision = None
            matched = True
            break
        self._record(TraceEvent("recv", recipient, {
            "sender": act.signer, "payload": render(act.payload),
            "seq": act.seq, "matched": matched}))
        if matched:
            if cell.state == STOP:
                self._halt_agent(recipient)
            else:
                self._silent_close(recipient)

    # --- output steps ---

    def domain(self, name: str) -> list[Term]:
        return [Atom(a) for a in sorted(self.agents)
                if a != name and self.agents[a].alive]

    def fresh_names(self, count: int = 3) -> list[str]:
        out = []
        n = 0
        while len(out) < count:
            n += 1
            candidate = f"f{n}"
            if candidate not in self.agents:
                out.append(candidate)
        return out

    def alternatives(self, name: str) -> list[Alternative]:
        cell = self.agents[name]
        if not cell.alive:
            return []
        out = []
        for rule in self.rules:
            if rule.kind != "output":
                continue
            theta = match(rule.pre, cell.state, {SELF: Atom(name)})
            if theta is None:
                continue
            for th, residual in partial_eval(rule.conditions, theta):
                needed = []
                for t in filter(None, [
                        rule.output.payload if rule.output else None,
                        rule.spawn.agent if rule.spawn else None,
                        rule.spawn.state if rule.spawn else None,
                        rule.post]):
                    needed.extend(v for v in variables(t) if v not in needed)
                targets = set()
                for cond in residual:
                    needed.extend(v for v in _condition_inputs(cond)
                                  if v not in needed)
                    if isinstance(cond, (Assign, AssignChoice)):
                        targets.add(cond.var)
                    elif isinstance(cond, ListOp):
                        targets.add(cond.result)
                unbound = [v for v in needed if v not in th and v not in targets]
                out.append(Alternative(rule, th, unbound, residual))
        return out

    def _deterministic_step(self, alts: list[Alternative]) -> Optional[GroundStep]:
        """The single forced step, when the agent has no actual choice."""
        if len(alts) != 1:
            return None
        alt = alts[0]
        if alt.unbound or alt.has_choice():
            return None
        steps = ground_alternative(alt, {})
        return steps[0] if len(steps) == 1 else None

    def needs_consult(self, name: str) -> bool:
        cell = self.agents[name]
        if cell.cached_for(render(cell.state)) is not None:
            return False
        alts = self.alternatives(name)
        return bool(alts) and self._deterministic_step(alts) is None

    def consult(self, name: str) -> Optional[GroundStep]:
        """Resolve the agent's next output step, consulting the oracle when
        a genuine choice remains. Caches the outcome for the current state."""
        cell = self.agents[name]
        state_key = render(cell.state)
        cached = cell.cached_for(state_key)
        if cached is not None:
            return cached if isinstance(cached, GroundStep) else None
        alts = self.alternatives(name)
        if not alts:
            raise NotEnabled(f"agent {name!r} has no enabled output")
        step = self._deterministic_step(alts)
        if step is not None:
            cell.decision = (state_key, step)
            return step
        self._request_counter += 1
        request = OracleRequest(self._request_counter, name, cell.state, alts,
                                self.domain(name), self.fresh_names())
        provider = self.oracle
        if name in self.autonomous:
            from .oracle import auto_oracle
            provider = auto_oracle
        decision = provider(request)
        if decision.kind == "pass":
            cell.decision = (state_key, "pass")
            self._record(TraceEvent("oracle", name, {"decision": "pass"}))
            return None
        steps = ground_alternative(alts[decision.index], decision.bindings)
        if not steps:
            raise StructureError(
                f"oracle decision for {name!r} does not ground an enabled step")
        step = steps[0]
        cell.decision = (state_key, step)
        self._record(TraceEvent("oracle", name, {
            "decision": "choose", "payload": render(step.describe())}))
        return step

    def can_output(self, name: str) -> bool:
        cell = self.agents[name]
        if not cell.alive:
            return False
        cached = cell.cached_for(render(cell.state))
        if cached is not None:
            return isinstance(cached, GroundStep)
        return bool(self.alternatives(name))

    def commit_output(self, name: str):
        cell = self.agents[name]
        step = self.consult(name)
        if step is None:
            # the oracle passed; the pass stays cached for this state
            return
        cell.decision = None
        if step.payload is not None:
            self._broadcast(name, step.payload)
        if step.spawn is not None:
            self._spawn(name, step.spawn[0], step.spawn[1])
        cell.state = step.post
        if cell.state == STOP:
            self._halt_agent(name)
        else:
            self._silent_close(name)

    def _spawn(self, spawner: str, name: str, state: Term):
        autonomous = name == "autonomous"
        if autonomous:
            while True:
                self._auto_counter += 1
                name = f"a{self._auto_counter}"
                if name not in self.agents:
                    break
        elif name in self.agents:
            raise SpawnCollision(f"agent name {name!r} already in use")
        # baseline snapshot: the new agent sees only acts sent from now on
        baseline = {other: self.agents[other].sent for other in self.agents}
        self.agents[name] = AgentCell(name=name, state=state, baseline=baseline)
        if autonomous:
            self.autonomous.add(name)
        self._broadcast(spawner, Struct("activated", (Atom(name), state)))
        self._silent_close(name)

    # --- halt ---

    def finalize(self):
        if self._finalized:
            return
        self._finalized = True
        for name in sorted(self.agents):
            cell = self.agents[name]
            self._record(TraceEvent("final", name, {
                "state": render(cell.state),
                "received": {s: n for s, n in sorted(cell.received.items())},
                "baseline": {s: n for s, n in sorted(cell.baseline.items()) if n},
                "sent": cell.sent,
            }))


# --- schedulers -------------------------------------------------------------

def _flush_deliveries(config: Configuration, budget: list[int]):
    while budget[0] > 0:
        pairs = config.deliverable_pairs()
        if not pairs:
            return
        config.step_input(*pairs[0])
        budget[0] -= 1


def _output_ready(config: Configuration, name: str) -> bool:
    cell = config.agents[name]
    if not cell.alive:
        return False
    if cell.cached_for(render(cell.state)) == "pass":
        return False
    return bool(config.alternatives(name))


def canonical_scheduler(order: Optional[list[str]] = None):
    """Deterministic policy. With an order hint, the run performs exactly the
    hinted visible events (oracle consults and acts), delivering pending
    inputs eagerly in between, then halts. Without a hint: deliveries first,
    then continuations, then outputs, lowest agent name first."""
    hint = list(order) if order else None

    def schedule(config: Configuration, budget: list[int]):
        if hint is not None:
            for name in hint:
                if budget[0] <= 0:
                    return
                _flush_deliveries(config, budget)
                if budget[0] <= 0:
                    return
                if name not in config.agents:
                    raise NotEnabled(f"order hint names unknown agent {name!r}")
                if config.needs_consult(name):
                    config.consult(name)
                else:
                    config.commit_output(name)
                budget[0] -= 1
            _flush_deliveries(config, budget)
            return
        while budget[0] > 0:
            pairs = config.deliverable_pairs()
            if pairs:
                config.step_input(*pairs[0])
                budget[0] -= 1
                continue
            progressed = False
            for name in sorted(config.agents):
                if config.has_continuation(name):
                    config.commit_output(name)
                    budget[0] -= 1
                    progressed = True
                    break
            if progressed:
                continue
            for name in sorted(config.agents):
                if _output_ready(config, name):
                    before = len(config.trace.events)
                    config.commit_output(name)
                    budget[0] -= 1
                    if len(config.trace.events) > before:
                        progressed = True
                        break
            if not progressed:
                return

    return schedule


def random_scheduler(seed: int, fairness: Optional[int] = None):
    """Uniformly random choice among enabled moves, reproducible per seed.
    With fairness=N, an agent with an enabled move is forced to act after
    being passed over N times in a row."""
    import random as _random
    rng = _random.Random(seed)

    def schedule(config: Configuration, budget: list[int]):
        waiting: dict[str, int] = {}
        while budget[0] > 0:
            moves = []
            for name in sorted(config.agents):
                if config.has_continuation(name):
                    moves.append(("commit", name))
            if not moves:
                for pair in config.deliverable_pairs():
                    moves.append(("input",) + pair)
                for name in sorted(config.agents):
                    if not config.has_continuation(name) \
                            and _output_ready(config, name):
                        moves.append(("commit", name))
            if not moves:
                return
            pool = moves
            if fairness is not None:
                able = {m[1] for m in moves}
                starved = [a for a in able if waiting.get(a, 0) >= fairness]
                if starved:
                    first = min(starved)
                    pool = [m for m in moves if m[1] == first]
            move = rng.choice(pool)
            for agent in {m[1] for m in moves}:
                waiting[agent] = 0 if agent == move[1] else waiting.get(agent, 0) + 1
            if move[0] == "input":
                config.step_input(move[1], move[2])
            else:
                config.commit_output(move[1])
            budget[0] -= 1

    return schedule


def run(config: Configuration, scheduler, max_steps: int = 1000) -> Trace:
    budget = [max_steps]
    scheduler(config, budget)
    config.finalize()
    return config.trace
