"""Oracle providers: how open output choices get resolved.

A provider is a callable from OracleRequest to OracleDecision. The runtime
consults it only when an agent has a genuine choice: several alternatives,
unbound output variables, or a value choice in the conditions.
"""

from __future__ import annotations

import itertools
import json
import queue
import random
from decimal import Decimal
from typing import Optional

from .errors import AutoOracleAmbiguous, OracleScriptMismatch, SessionClosed
from .parser import parse_term
from .runtime import (Alternative, GroundStep, OracleDecision, OracleRequest,
                      ground_alternative)
from .terms import Atom, Num, Substitution, Term, match, render


def auto_oracle(request: OracleRequest) -> OracleDecision:
    """Accept only forced steps: a genuine choice is an error."""
    forced = []
    for i, alt in enumerate(request.alternatives):
        if alt.unbound or alt.has_choice():
            raise AutoOracleAmbiguous(
                f"agent {request.agent!r} has an open choice in "
                f"{render(alt.describe())}")
        steps = ground_alternative(alt, {})
        forced.extend((i, s) for s in steps)
    if not forced:
        return OracleDecision("pass")
    if len(forced) > 1:
        options = ", ".join(render(s.describe()) for _, s in forced)
        raise AutoOracleAmbiguous(
            f"agent {request.agent!r} must choose among: {options}")
    return OracleDecision("choose", forced[0][0])


def _grounded_options(request: OracleRequest, extra: list[Term],
                      cap: int = 2000) -> list[tuple[int, Substitution, GroundStep]]:
    """Enumerate ground decisions by binding open variables over the live
    agents (spawn positions over fresh names) plus extra values."""
    options = []
    for i, alt in enumerate(request.alternatives):
        spawn_var = None
        if alt.rule.spawn is not None:
            agent_pat = alt.spawn_pattern()[0]
            if not isinstance(agent_pat, Atom):
                spawn_var = agent_pat.name
        pools = []
        for v in alt.unbound:
            if v == spawn_var:
                pools.append([Atom(n) for n in request.fresh_names[:1]])
            else:
                pools.append(request.domain + extra)
        total = 1
        for p in pools:
            total *= len(p)
        if total > cap:
            continue
        for combo in itertools.product(*pools):
            bindings = dict(zip(alt.unbound, combo))
            for step in ground_alternative(alt, bindings):
                options.append((i, bindings, step))
    return options


def random_oracle(seed: int, extra_values: Optional[list[Term]] = None):
    """Uniform choice among ground decisions, reproducible per seed. Open
    variables range over the other live agents plus small numbers."""
    rng = random.Random(seed)
    extra = extra_values if extra_values is not None \
        else [Num(Decimal(n)) for n in (1, 2, 3)]

    def provider(request: OracleRequest) -> OracleDecision:
        options = _grounded_options(request, extra)
        if not options:
            return OracleDecision("pass")
        i, bindings, _ = rng.choice(options)
        return OracleDecision("choose", i, bindings)

    return provider


def _match_entry(alternatives: list[Alternative], wanted: Term):
    for i, alt in enumerate(alternatives):
        pattern = alt.describe()
        theta = match(pattern, wanted)
        if theta is None:
            continue
        bindings = {v: theta[v] for v in alt.unbound if v in theta}
        if ground_alternative(alt, bindings):
            return i, bindings
    return None


def scripted_oracle(script: dict):
    """Follow a per-agent list of decisions; pass once an agent's list runs out.

    The script maps agent names to lists of act payloads in canonical text
    form, e.g. {"gal": ["reserve(ouri)"]}.
    """
    remaining = {agent: list(entries) for agent, entries in script.items()}

    def provider(request: OracleRequest) -> OracleDecision:
        entries = remaining.get(request.agent)
        if not entries:
            return OracleDecision("pass")
        wanted = parse_term(entries[0])
        hit = _match_entry(request.alternatives, wanted)
        if hit is None:
            options = ", ".join(render(a.describe())
                                for a in request.alternatives)
            raise OracleScriptMismatch(
                f"scripted decision {entries[0]!r} for agent "
                f"{request.agent!r} grounds none of: {options}")
        entries.pop(0)
        return OracleDecision("choose", hit[0], hit[1])

    return provider


def load_script(path: str) -> tuple:
    """Read a script file; returns (provider, order hint or None).

    The file holds {"agents": {...}, "order": [...]} or a bare agents map.
    """
    with open(path) as f:
        data = json.load(f)
    if "agents" in data:
        return scripted_oracle(data["agents"]), data.get("order")
    return scripted_oracle(data), None


class InteractiveOracle:
    """Bridges oracle requests to an external decision source over a pair of
    queues; used by the gateway. A timeout or closed session counts as pass."""

    def __init__(self, timeout: Optional[float] = None):
        self.requests: "queue.Queue" = queue.Queue()
        self.decisions: "queue.Queue" = queue.Queue()
        self.timeout = timeout
        self.closed = False

    def close(self):
        self.closed = True
        self.requests.put(None)

    def __call__(self, request: OracleRequest) -> OracleDecision:
        if self.closed:
            return OracleDecision("pass")
        self.requests.put(request)
        try:
            decision = self.decisions.get(timeout=self.timeout)
        except queue.Empty:
            return OracleDecision("pass")
        if decision is None:
            raise SessionClosed("oracle session closed")
        return decision
